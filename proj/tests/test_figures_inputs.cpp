#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pzflow/macro_model.hpp"

namespace fs = std::filesystem;
using namespace pzflow;

namespace {

struct Csv {
  std::string comment;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    REQUIRE(it != columns.end());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[it - columns.begin()]);
    return out;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  return out;
}

Csv read_csv(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  Csv csv;
  std::string line;
  std::getline(in, csv.comment);
  std::getline(in, line);
  csv.columns = split(line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const std::string& c : split(line)) row.push_back(std::stod(c));
    REQUIRE(row.size() == csv.columns.size());
    csv.rows.push_back(row);
  }
  return csv;
}

MacroConfig small_run() {
  MacroConfig cfg;
  cfg.coeffs.A = {2e9, 5e10, 0.0, 0.0};
  cfg.coeffs.B = {0.8};
  cfg.coeffs.M = {4e-10};
  cfg.coeffs.H = {1e-3};
  cfg.coeffs.Z = {2e-12};
  cfg.coeffs.K = {1e-9, 4e-8, 0.0, 5e-15};
  cfg.length = 0.1;
  cfg.nodes = 21;
  cfg.dt = 0.01;
  cfg.steps = 12;
  cfg.output_stride = 4;
  cfg.pressure_right = 100.0;
  cfg.wave = ControlWave::abs_sine(-1e5, 0.8, std::numbers::pi / 0.05);
  return cfg;
}

fs::path outputs() {
  const fs::path dir = fs::path(PZFLOW_TEST_TMP) / "figures_inputs";
  fs::remove_all(dir);
  write_simulation_outputs(run_simulation(small_run()), dir.string());
  return dir;
}

}  // namespace

TEST_SUITE("figures_inputs") {
  TEST_CASE("fluxes.csv schema") {
    const fs::path dir = outputs();
    const Csv f = read_csv(dir / "fluxes.csv");
    CHECK(f.comment == "# pzflow fluxes v1");
    CHECK(f.columns == std::vector<std::string>{"t", "Q_minus", "Q_mid", "Q_plus", "newton_iters"});
    CHECK(f.rows.size() == std::size_t(small_run().steps + 1));
    const std::vector<double> t = f.column("t");
    CHECK(t.front() == 0.0);
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] > t[k - 1]);
    CHECK(f.column("Q_plus").front() == 0.0);
  }

  TEST_CASE("field snapshot schema") {
    const fs::path dir = outputs();
    std::vector<double> x0;
    int count = 0;
    for (int step : {0, 4, 8, 12}) {
      const fs::path path = dir / ("fields_" + std::to_string(step) + ".csv");
      REQUIRE(fs::exists(path));
      const Csv s = read_csv(path);
      CHECK(s.comment.rfind("# pzflow fields v1; t = ", 0) == 0);
      CHECK(s.columns == std::vector<std::string>{"x", "u", "p", "w"});
      CHECK(s.rows.size() == std::size_t(small_run().nodes));
      const std::vector<double> x = s.column("x");
      if (x0.empty()) x0 = x;
      CHECK(x == x0);
      if (step > 0) CHECK(s.column("p").back() == doctest::Approx(small_run().pressure_right));
      ++count;
    }
    CHECK(count == 4);
  }

  TEST_CASE("summary.json matches a regression over fluxes.csv") {
    const fs::path dir = outputs();
    std::ifstream in(dir / "summary.json");
    const nlohmann::json s = nlohmann::json::parse(in);
    for (const char* key : {"slope_Q_minus", "slope_Q_mid", "slope_Q_plus", "final_quarter_imbalance",
                            "max_newton_iters", "mean_newton_iters"})
      CHECK(s.contains(key));

    // Independent least-squares fit over t >= t_end / 2.
    const Csv f = read_csv(dir / "fluxes.csv");
    const std::vector<double> t = f.column("t"), Q = f.column("Q_plus");
    double n = 0, mt = 0, mq = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] >= 0.5 * t.back()) {
        n += 1;
        mt += t[k];
        mq += Q[k];
      }
    mt /= n;
    mq /= n;
    double num = 0, den = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] >= 0.5 * t.back()) {
        num += (t[k] - mt) * (Q[k] - mq);
        den += (t[k] - mt) * (t[k] - mt);
      }
    CHECK(s.at("slope_Q_plus").get<double>() == doctest::Approx(num / den).epsilon(1e-9));
  }
}
