#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pzflow/error.hpp"
#include "pzflow/macro_model.hpp"
#include "pzflow/sensitivity.hpp"

namespace pzflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

struct Options {
  std::string subcommand;
  std::string action;  // mesh: generate | validate
  std::string config;
  std::string out = "out";
  std::string mode;
  bool sweep = false;
  int threads = 1;
};

/// Collects produced files and writes manifest.json.
class Manifest {
 public:
  Manifest(const Options& o) : opt_(o), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& relative) { outputs_.push_back(relative); }
  void stat(const std::string& key, json value) { stats_[key] = std::move(value); }

  void write() const {
    json files = json::array();
    for (const std::string& f : outputs_)
      files.push_back({{"path", f}, {"sha256", file_checksum((fs::path(opt_.out) / f).string())}});
    json inputs = json::array();
    for (const std::string& f : inputs_) inputs.push_back({{"path", f}, {"sha256", file_checksum(f)}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"subcommand", opt_.action.empty() ? opt_.subcommand : opt_.subcommand + " " + opt_.action},
              {"inputs", inputs},
              {"output_dir", opt_.out},
              {"deterministic", true},
              {"threads", opt_.threads},
              {"wall_clock_s", wall},
              {"solver", stats_},
              {"files", files}};
    std::ofstream(fs::path(opt_.out) / "manifest.json") << m.dump(2) << '\n';
  }

 private:
  const Options& opt_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> inputs_, outputs_;
  json stats_ = json::object();
};

json read_config(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");
    return j;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, path + ": " + ex.what());
  }
}

using Keys = std::vector<std::string>;

/// Keys starting with '_' are comments.
void check_keys(const json& j, const Keys& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!key.empty() && key[0] == '_') continue;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::SchemaError, "unknown config key '" + key + "'");
  }
}

Keys operator+(Keys a, const Keys& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string resolve(const std::string& config_path, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(config_path).parent_path() / path).lexically_normal().string();
}

const Keys cell_keys = {"mesh_file",       "cell",          "uniform_region", "resolution", "channel_halfwidth",
                        "bulge_amplitude", "piezo_thickness"};

CellMesh cell_from_config(const json& j, const Options& o, Manifest& manifest) {
  if (j.contains("mesh_file")) {
    const std::string path = resolve(o.config, j.at("mesh_file").get<std::string>());
    manifest.input(path);
    return load_mesh(path);
  }
  const int n = j.value("resolution", 32);
  const std::string cell = j.value("cell", std::string("canonical"));
  if (cell == "uniform") return generate_uniform_cell(n, parse_region(j.value("uniform_region", std::string("matrix_piezo"))));
  if (cell != "canonical") throw Error(ErrorCode::ConfigError, "cell must be 'canonical' or 'uniform'");
  CanonicalGeometry g;
  g.channel_halfwidth = j.value("channel_halfwidth", g.channel_halfwidth);
  g.bulge_amplitude = j.value("bulge_amplitude", g.bulge_amplitude);
  g.piezo_thickness = j.value("piezo_thickness", g.piezo_thickness);
  return generate_canonical_cell(n, g);
}

MaterialSet materials_from_config(const json& j, const Options& o, Manifest& manifest) {
  const std::string path = resolve(o.config, j.at("materials").get<std::string>());
  manifest.input(path);
  MaterialSet mat = load_materials(path);
  if (j.contains("scale")) {
    mat.scale = j.at("scale").get<double>();
    validate(mat);
  }
  return mat;
}

template <typename F>
auto with_schema(F&& f) {
  try {
    return f();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed config: ") + ex.what());
  }
}

int cmd_mesh(const Options& o) {
  const json j = read_config(o.config);
  Manifest manifest(o);
  manifest.input(o.config);
  fs::create_directories(o.out);
  if (o.action == "generate") {
    check_keys(j, cell_keys);
    const CellMesh mesh = with_schema([&] { return cell_from_config(j, o, manifest); });
    validate(mesh);
    save_mesh(mesh, (fs::path(o.out) / "mesh.json").string());
    manifest.output("mesh.json");
    manifest.stat("nodes", mesh.node_count());
    manifest.stat("elements", mesh.element_count());
  } else {
    check_keys(j, {"mesh_file"});
    const CellMesh mesh = with_schema([&] { return cell_from_config(j, o, manifest); });
    validate(mesh);
    const json report = {{"valid", true},
                         {"nodes", mesh.node_count()},
                         {"elements", mesh.element_count()},
                         {"electrodes", mesh.electrode_count()},
                         {"facets", mesh.facets.size()},
                         {"cell_measure", cell_measure(mesh)}};
    std::ofstream(fs::path(o.out) / "validation.json") << report.dump(2) << '\n';
    manifest.output("validation.json");
  }
  manifest.write();
  return Success;
}

int cmd_homogenize(const Options& o) {
  const json j = read_config(o.config);
  check_keys(j, cell_keys + Keys{"materials", "scale", "correctors", "gradients"});
  Manifest manifest(o);
  manifest.input(o.config);
  const auto [mesh, mat] = with_schema([&] {
    return std::pair{cell_from_config(j, o, manifest), materials_from_config(j, o, manifest)};
  });
  const bool correctors = j.value("correctors", true);
  const bool gradients = j.value("gradients", true);

  const CellForms forms = assemble_cell_forms(mesh, mat);
  const CorrectorSet c = solve_all_correctors(forms, mesh, mat);
  const HomCoeffs h = compute_coefficients(forms, mat, c);

  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "coefficients.json") << std::setprecision(17) << to_json(h).dump(2) << '\n';
  manifest.output("coefficients.json");
  if (gradients) {
    const CoeffGradients g = state_gradients(forms, mat, c);
    std::ofstream(fs::path(o.out) / "gradients.json") << to_json(g).dump(2) << '\n';
    manifest.output("gradients.json");
  }
  if (correctors) {
    const fs::path dir = fs::path(o.out) / "correctors";
    fs::create_directories(dir);
    for (const std::string& f : export_correctors_csv(c, mesh, dir.string()))
      manifest.output((fs::path("correctors") / fs::path(f).filename()).string());
  }
  manifest.stat("nodes", mesh.node_count());
  manifest.stat("elements", mesh.element_count());
  manifest.stat("corrector_residual", c.max_residual);
  manifest.stat("symmetry_defect", symmetry_defect(h));
  manifest.stat("B_identity_gap", h.B_identity_gap);
  if (c.stokes) manifest.stat("warnings", c.stokes->warnings);
  manifest.write();
  return Success;
}

int cmd_audit(const Options& o) {
  const json j = read_config(o.config);
  check_keys(j, cell_keys + Keys{"materials", "scale", "random_fields", "seed", "tau", "sweep", "sweep_taus", "budget",
                                 "rel_tolerance"});
  Manifest manifest(o);
  manifest.input(o.config);
  AuditConfig cfg;
  double tolerance = 1e-3;
  const auto [mesh, mat] = with_schema([&] {
    cfg.random_fields = j.value("random_fields", cfg.random_fields);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.sweep = j.value("sweep", false) || o.sweep;
    if (j.contains("sweep_taus")) cfg.sweep_taus = j.at("sweep_taus").get<std::array<double, 3>>();
    cfg.budget = j.value("budget", cfg.budget);
    tolerance = j.value("rel_tolerance", tolerance);
    return std::pair{cell_from_config(j, o, manifest), materials_from_config(j, o, manifest)};
  });
  if (!(cfg.tau > 0.0) || cfg.random_fields < 0 || cfg.budget < 1)
    throw Error(ErrorCode::ConfigError, "tau must be positive, random_fields non-negative, budget at least 1");

  const AuditResult r = run_sensitivity_audit(mesh, mat, cfg);
  fs::create_directories(o.out);
  write_audit_csv(r, (fs::path(o.out) / "audit.csv").string());
  manifest.output("audit.csv");
  if (cfg.sweep) {
    write_sweep_csv(r, (fs::path(o.out) / "sweep.csv").string());
    manifest.output("sweep.csv");
  }
  const bool pass = r.max_rel_error <= tolerance;
  json summary = {{"rows", r.rows.size()}, {"max_rel_error", r.max_rel_error}, {"rel_tolerance", tolerance},
                  {"fd_solves", r.solves}, {"pass", pass}};
  if (cfg.sweep) summary["min_slope"] = r.min_slope;
  std::ofstream(fs::path(o.out) / "audit_summary.json") << summary.dump(2) << '\n';
  manifest.output("audit_summary.json");
  manifest.stat("fd_solves", r.solves);
  manifest.stat("max_rel_error", r.max_rel_error);
  manifest.write();
  std::cout << summary.dump() << '\n';
  return pass ? Success : NumericalFailure;
}

int cmd_simulate(const Options& o) {
  const json j = read_config(o.config);
  Manifest manifest(o);
  manifest.input(o.config);
  MacroConfig cfg = macro_config_from_json(j, fs::path(o.config).parent_path().string());
  if (const auto& cj = j.at("coefficients"); cj.contains("report")) {
    manifest.input(resolve(o.config, cj.at("report").get<std::string>()));
    manifest.input(resolve(o.config, cj.at("gradients").get<std::string>()));
  }
  if (o.mode == "linear") cfg.mode = Nonlinearity::Linear;
  if (o.mode == "semilinear") cfg.mode = Nonlinearity::Semilinear;

  std::vector<double> amplitudes;
  if (j.contains("amplitude_sweep_V")) {
    amplitudes = with_schema([&] { return j.at("amplitude_sweep_V").get<std::vector<double>>(); });
    if (cfg.wave.mode != ControlWave::Mode::CaseTable)
      throw Error(ErrorCode::ConfigError, "amplitude_sweep_V needs a case_table wave");
  }
  fs::create_directories(o.out);

  auto record = [&](const TimeSeries& ts, const std::string& sub) {
    for (const std::string& f : write_simulation_outputs(ts, (fs::path(o.out) / sub).string()))
      manifest.output((fs::path(sub) / f).lexically_normal().string());
  };

  if (amplitudes.empty()) {
    const TimeSeries ts = run_simulation(cfg);
    record(ts, ".");
    const SimulationSummary s = summarize(ts);
    manifest.stat("max_newton_iters", s.max_newton_iters);
    manifest.stat("mean_newton_iters", s.mean_newton_iters);
    std::cout << to_json(s).dump() << '\n';
  } else {
    // Independent runs in parallel, outputs written in order.
    std::vector<TimeSeries> series(amplitudes.size());
    const std::size_t width = std::max(1, o.threads);
    for (std::size_t start = 0; start < amplitudes.size(); start += width) {
      std::vector<std::future<TimeSeries>> batch;
      for (std::size_t i = start; i < std::min(amplitudes.size(), start + width); ++i) {
        MacroConfig c = cfg;
        c.wave.phi_star = amplitudes[i];
        batch.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred,
                                   [c] { return run_simulation(c); }));
      }
      for (std::size_t i = 0; i < batch.size(); ++i) series[start + i] = batch[i].get();
    }
    std::ofstream table(fs::path(o.out) / "amplitude_sweep.csv");
    table << std::setprecision(17) << "# pzflow amplitude sweep v1\nphi_star_V,slope_minus,slope_mid,slope_plus\n";
    int max_iters = 0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      const std::string sub = "amp_" + std::to_string(i);
      record(series[i], sub);
      const SimulationSummary s = summarize(series[i]);
      max_iters = std::max(max_iters, s.max_newton_iters);
      table << amplitudes[i] << ',' << s.slope_minus << ',' << s.slope_mid << ',' << s.slope_plus << '\n';
    }
    table.close();
    manifest.output("amplitude_sweep.csv");
    manifest.stat("max_newton_iters", max_iters);
  }
  manifest.stat("mode", cfg.mode == Nonlinearity::Linear ? "linear" : "semilinear");
  manifest.write();
  return Success;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::SingularSystem:
    case ErrorCode::SolverFailure:
    case ErrorCode::InfSupFailure:
    case ErrorCode::IncompleteCorrectors:
    case ErrorCode::QuadratureError:
    case ErrorCode::ExtensionFailure:
    case ErrorCode::SingularElasticity:
    case ErrorCode::MissingPreviousState:
    case ErrorCode::NewtonDivergence:
    case ErrorCode::LinearSolveFailure:
    case ErrorCode::OracleBudgetExceeded:
      return NumericalFailure;
    default:
      return ConfigurationError;
  }
}

int report_error(const Options& o, const std::string& name, const std::string& message, int code) {
  const json e = {{"error", name}, {"message", message}, {"exit_code", code}, {"subcommand", o.subcommand}};
  std::cerr << e.dump() << '\n';
  if (o.out.empty()) return code;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (!ec) std::ofstream(fs::path(o.out) / "error.json") << e.dump(2) << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"pzflow: piezo-porous cell homogenization and 1D peristaltic flow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pzflow 1.0");
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  CLI::App* homogenize = app.add_subcommand("homogenize", "cell correctors and homogenized coefficients");
  common(homogenize);
  CLI::App* audit = app.add_subcommand("audit", "sensitivity formulas against the finite-difference oracle");
  common(audit);
  audit->add_flag("--sweep", o.sweep, "emit the tau-sweep order table");
  CLI::App* simulate = app.add_subcommand("simulate", "1D macroscopic peristaltic flow");
  common(simulate);
  simulate->add_option("--mode", o.mode, "coefficient model")->check(CLI::IsMember({"linear", "semilinear"}));
  CLI::App* mesh = app.add_subcommand("mesh", "cell mesh generation and validation");
  mesh->require_subcommand(1);
  for (const char* action : {"generate", "validate"}) common(mesh->add_subcommand(action));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    o.out.clear();
    return report_error(o, "UsageError", e.what(), ConfigurationError);
  }

  for (CLI::App* sub : app.get_subcommands()) o.subcommand = sub->get_name();
  if (o.subcommand == "mesh")
    for (CLI::App* sub : mesh->get_subcommands()) o.action = sub->get_name();
  Eigen::setNbThreads(o.threads);

  try {
    if (o.subcommand == "homogenize") return cmd_homogenize(o);
    if (o.subcommand == "audit") return cmd_audit(o);
    if (o.subcommand == "simulate") return cmd_simulate(o);
    return cmd_mesh(o);
  } catch (const Error& e) {
    return report_error(o, std::string(e.name()), e.what(), exit_code_for(e.code()));
  } catch (const fs::filesystem_error& e) {
    return report_error(o, "ConfigError", e.what(), ConfigurationError);
  } catch (const json::exception& e) {
    return report_error(o, "SchemaError", e.what(), ConfigurationError);
  }
}

}  // namespace pzflow::cli
