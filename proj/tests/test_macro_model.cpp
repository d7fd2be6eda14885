#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pzflow/error.hpp"
#include "pzflow/macro_model.hpp"

using namespace pzflow;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

// Constant coefficients of poroelastic magnitude.
MacroCoefficients constant_coefficients() {
  MacroCoefficients c;
  c.A = {2e9};
  c.B = {0.8};
  c.M = {4e-10};
  c.H = {1e-3};
  c.Z = {2e-12};
  c.K = {1e-9};
  return c;
}

MacroCoefficients expanded_coefficients() {
  MacroCoefficients c = constant_coefficients();
  c.A = {2e9, 5e10, 3e3, -1e2};
  c.B = {0.8, 4.0, 1e-6, 2e-7};
  c.M = {4e-10, 1e-8, 2e-16, 1e-16};
  c.H = {1e-3, 2e-2, 1e-9, 0.0};
  c.Z = {2e-12, 3e-11, 1e-18, 1e-18};
  c.K = {1e-9, 4e-8, 2e-15, 5e-15};
  return c;
}

MacroConfig base_config() {
  MacroConfig cfg;
  cfg.coeffs = constant_coefficients();
  cfg.length = 0.2;
  cfg.nodes = 41;
  cfg.dt = 0.01;
  cfg.steps = 20;
  cfg.pressure_right = 500.0;
  cfg.wave = ControlWave::abs_sine(-1e5, 0.8, std::numbers::pi / 0.1);
  return cfg;
}

MacroConfig demo_config() {
  std::ifstream in(std::string(PZFLOW_DATA_DIR) + "/simulate_demo.json");
  return macro_config_from_json(nlohmann::json::parse(in), PZFLOW_DATA_DIR);
}

MacroState random_state(int n, double t_prev, double dt, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  MacroState s = MacroState::zero(n);
  s.t_prev = t_prev;
  s.t = t_prev + dt;
  for (int i = 0; i < n; ++i) {
    s.u[i] = 1e-5 * U(rng);
    s.p[i] = 100.0 * U(rng);
    s.u_prev[i] = 1e-5 * U(rng);
    s.p_prev[i] = 100.0 * U(rng);
  }
  return s;
}

// Worst block-wise relative error of the tangent against a central difference.
double tangent_error(const MacroState& s, const MacroConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = cfg.nodes;
  VecX d(2 * n);
  for (int i = 0; i < n; ++i) {
    d[i] = 1e-5 * U(rng);
    d[n + i] = 100.0 * U(rng);
  }
  const double h = 1e-6;
  MacroState a = s, b = s;
  a.u += h * d.head(n);
  a.p += h * d.tail(n);
  b.u -= h * d.head(n);
  b.p -= h * d.tail(n);
  const VecX fd = (assemble_residual(a, cfg) - assemble_residual(b, cfg)) / (2.0 * h);
  const VecX jd = assemble_tangent(s, cfg) * d;
  return std::max((fd.head(n) - jd.head(n)).norm() / jd.head(n).norm(),
                  (fd.tail(n) - jd.tail(n)).norm() / jd.tail(n).norm());
}

// Pressure at t_end for a drained consolidation run on `nodes` nodes.
VecX consolidation_pressure(int nodes, double length) {
  MacroConfig cfg = base_config();
  cfg.wave = ControlWave::abs_sine(0.0, 1.0, 1.0);
  cfg.nodes = nodes;
  cfg.length = length;
  cfg.dt = 1e-3;
  cfg.steps = 10;
  cfg.mode = Nonlinearity::Linear;
  MacroState s = MacroState::zero(nodes);
  for (int k = 0; k < cfg.steps; ++k) s = newton_time_step(s, cfg);
  return s.p;
}

}  // namespace

TEST_SUITE("macro_model") {
  TEST_CASE("1D reduced coefficients") {
    const Reduced1D none = reduced_1d_coefficients(3.0, 0.0, 1.5, 0.0, 0.7, 1.0, 2.0, 0.4, 0.6);
    CHECK(none.C == 1.5);
    CHECK(none.F == 0.7);
    CHECK(none.K_p == 0.4);
    CHECK(none.K_phi == 0.6);

    const Reduced1D r = reduced_1d_coefficients(2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
    CHECK(r.C == doctest::Approx(1.5));

    // Eliminating e = (B p - H phi) / A from the stress-free balance.
    const double A = 3.0, B = 0.6, M = 0.2, H = 0.4, Z = 0.1, p = 1.7, phi = -0.9;
    const double e = (B * p - H * phi) / A;
    const Reduced1D g = reduced_1d_coefficients(A, B, M, H, Z, 1.0, 0.0, 0.0, 0.0);
    CHECK(B * e + M * p - Z * phi == doctest::Approx(g.C * p - g.F * phi));
    CHECK(code_of([] { reduced_1d_coefficients(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0); }) ==
          ErrorCode::SingularElasticity);
  }

  TEST_CASE("control waves") {
    const ControlWave w = ControlWave::case_table(2e5, std::numbers::pi / 0.03, 0.0, 10.0 * std::numbers::pi, 0.0);
    // psi >= 0 switches the electrode off.
    CHECK(evaluate_control(w, 0.01, 0.0) == 0.0);
    CHECK(evaluate_control(w, 0.0, 0.0) == 0.0);
    // psi = -pi gives the full amplitude.
    CHECK(evaluate_control(w, 0.0, 0.1) == doctest::Approx(2e5));
    // With b2 = 0 the wave does not depend on x2.
    CHECK(evaluate_control(w, Vec2(0.004, 0.0), 0.07) == evaluate_control(w, Vec2(0.004, 0.5), 0.07));

    const ControlWave p = ControlWave::abs_sine(-1e5, 0.8, 20.0);
    CHECK(p.omega == doctest::Approx(16.0));
    CHECK(evaluate_control(p, 0.0, 0.0) == 0.0);
    CHECK(evaluate_control(p, 0.0, std::numbers::pi / 32.0) == doctest::Approx(-1e5));
    CHECK(evaluate_control(p, 0.3, 0.2) <= 0.0);
  }

  TEST_CASE("zero state with no load has zero residual") {
    MacroConfig cfg = base_config();
    cfg.pressure_right = 0.0;
    cfg.wave = ControlWave::abs_sine(0.0, 1.0, 1.0);
    const MacroState s = MacroState::zero(cfg.nodes);
    CHECK(assemble_residual(s, cfg).cwiseAbs().maxCoeff() == 0.0);
    NewtonReport rep;
    const MacroState next = newton_time_step(s, cfg, &rep);
    CHECK(rep.iterations == 1);
    CHECK(next.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(next.p.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("steady state is nodally exact") {
    // Drained limit: p linear, sigma' + f = 0, sigma(L) = traction - P_right,
    // so u is quadratic and P1 Galerkin reproduces it at the nodes.
    MacroConfig cfg = base_config();
    cfg.wave = ControlWave::abs_sine(0.0, 1.0, 1.0);
    cfg.mode = Nonlinearity::Linear;
    cfg.pressure_left = 200.0;
    cfg.volume_force = 3e3;
    cfg.traction = 50.0;
    cfg.dt = 1e9;
    MacroState s = MacroState::zero(cfg.nodes);
    for (int k = 0; k < 4; ++k) s = newton_time_step(s, cfg);
    const double A = cfg.coeffs.A.value, B = cfg.coeffs.B.value, L = cfg.length, f = cfg.volume_force;
    const double P = cfg.pressure_right, p0 = cfg.pressure_left, g = (P - p0) / L;
    const double s0 = cfg.traction - P + f * L;
    double err_p = 0, err_u = 0, u_max = 0;
    for (int i = 0; i < cfg.nodes; ++i) {
      const double x = L * i / (cfg.nodes - 1);
      const double u = (s0 * x - 0.5 * f * x * x + B * (p0 * x + 0.5 * g * x * x)) / A;
      err_p = std::max(err_p, std::abs(s.p[i] - (p0 + g * x)));
      err_u = std::max(err_u, std::abs(s.u[i] - u));
      u_max = std::max(u_max, std::abs(u));
    }
    CHECK(err_p < 1e-9 * P);
    CHECK(err_u < 1e-9 * u_max);
  }

  TEST_CASE("second-order spatial convergence") {
    const double L = 0.3;
    const VecX ref = consolidation_pressure(641, L);
    std::vector<double> err;
    for (int n : {41, 81, 161}) {
      const VecX p = consolidation_pressure(n, L);
      const int stride = 640 / (n - 1);
      double e = 0;
      for (int i = 0; i < n; ++i) e = std::max(e, std::abs(p[i] - ref[i * stride]));
      err.push_back(e);
    }
    for (std::size_t k = 1; k < err.size(); ++k) CHECK(std::log2(err[k - 1] / err[k]) > 1.8);
  }

  TEST_CASE("tangent matches finite differences") {
    std::mt19937_64 rng(3);
    MacroConfig cfg = base_config();
    cfg.coeffs = expanded_coefficients();
    cfg.fluid_force = 40.0;
    for (int trial = 0; trial < 5; ++trial) {
      const MacroState s = random_state(cfg.nodes, 0.013 * trial, cfg.dt, rng);
      CHECK(tangent_error(s, cfg, rng) <= 1e-6);
    }
    const MacroConfig demo = demo_config();
    const MacroState s = random_state(demo.nodes, 0.1, demo.dt, rng);
    CHECK(tangent_error(s, demo, rng) <= 1e-6);
  }

  TEST_CASE("tangent coefficients") {
    const MacroCoefficients c = constant_coefficients();
    PointState ps;
    ps.e = 1e-4;
    ps.p = 30.0;
    ps.phi = -2e4;
    ps.dp = 5.0;
    const TangentCoefficients t = tangent_coefficients(c, ps, 5.0, 1.0);
    CHECK(t.A_bar == c.A.value);
    CHECK(t.B_bar == c.B.value);
    CHECK(t.D_bar == c.B.value);
    CHECK(t.M_bar == c.M.value);
    CHECK(t.G_bar == 0.0);
    CHECK(t.Q_bar == 0.0);

    const MacroCoefficients x = expanded_coefficients();
    const TangentCoefficients u = tangent_coefficients(x, ps, 5.0, 1.0);
    CHECK(u.G_bar == 0.0);
    CHECK(u.Q_bar == 0.0);
  }

  TEST_CASE("linear mode takes one Newton iteration") {
    MacroConfig cfg = base_config();
    cfg.coeffs = expanded_coefficients();
    cfg.mode = Nonlinearity::Linear;
    const TimeSeries ts = run_simulation(cfg);
    REQUIRE(ts.newton_iters.size() == std::size_t(cfg.steps + 1));
    CHECK(ts.newton_iters[0] == 0);
    for (std::size_t k = 1; k < ts.newton_iters.size(); ++k) CHECK(ts.newton_iters[k] == 1);
  }

  TEST_CASE("linear and semilinear agree without state gradients") {
    MacroConfig cfg = base_config();
    const TimeSeries semi = run_simulation(cfg);
    cfg.mode = Nonlinearity::Linear;
    const TimeSeries lin = run_simulation(cfg);
    const double scale = std::abs(lin.Q_plus.back()) + 1e-30;
    for (std::size_t k = 0; k < lin.times.size(); ++k) CHECK(std::abs(semi.Q_plus[k] - lin.Q_plus[k]) <= 1e-9 * scale);
  }

  TEST_CASE("runs are deterministic") {
    MacroConfig cfg = base_config();
    cfg.coeffs = expanded_coefficients();
    const TimeSeries a = run_simulation(cfg), b = run_simulation(cfg);
    CHECK(a.times == b.times);
    CHECK(a.Q_minus == b.Q_minus);
    CHECK(a.Q_plus == b.Q_plus);
    CHECK(a.newton_iters == b.newton_iters);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      CHECK(a.snapshots[k].u == b.snapshots[k].u);
      CHECK(a.snapshots[k].p == b.snapshots[k].p);
    }
  }

  TEST_CASE("Newton converges superlinearly on the demo") {
    MacroConfig cfg = demo_config();
    cfg.steps = 10;
    const TimeSeries ts = run_simulation(cfg);
    int pairs = 0;
    for (const auto& h : ts.residual_histories)
      for (std::size_t k = 1; k < h.size(); ++k)
        if (h[k - 1] < 1e-2 && h[k] > 1e-12) {
          CHECK(h[k] <= 10.0 * std::pow(h[k - 1], 1.5));
          ++pairs;
        }
    CHECK(summarize(ts).max_newton_iters <= cfg.newton_max_iter);
    CHECK(pairs > 0);
  }

  TEST_CASE("cumulative flux") {
    std::vector<double> t, one, sine;
    const int n = 401;
    const double T = 2.0;
    for (int k = 0; k < n; ++k) {
      t.push_back(T * k / (n - 1));
      one.push_back(1.0);
      sine.push_back(std::sin(2.0 * std::numbers::pi * t.back()));
    }
    const std::vector<double> Q = cumulative_flux(t, one);
    for (int k = 0; k < n; ++k) CHECK(Q[k] == doctest::Approx(t[k]).epsilon(1e-14));
    CHECK(cumulative_flux(t, one, -1.0).back() == doctest::Approx(-T));
    CHECK(std::abs(cumulative_flux(t, sine).back()) < 1e-12);

    // Trapezoid error on a smooth signal is second order.
    std::vector<double> tc, wc;
    for (int k = 0; k <= 40; ++k) {
      tc.push_back(k / 40.0);
      wc.push_back(std::exp(tc.back()));
    }
    CHECK(std::abs(cumulative_flux(tc, wc).back() - (std::exp(1.0) - 1.0)) < (std::exp(1.0) - 1.0) / 40.0 / 40.0);
  }

  TEST_CASE("regression slope over the second half") {
    std::vector<double> t, Q;
    for (int k = 0; k <= 20; ++k) {
      t.push_back(0.1 * k);
      Q.push_back(k < 10 ? 100.0 : 3.0 * t.back() - 1.0);
    }
    CHECK(regression_slope(t, Q) == doctest::Approx(3.0));
    CHECK(regression_slope({}, {}) == 0.0);
  }

  TEST_CASE("missing previous state") {
    const MacroConfig cfg = base_config();
    MacroState s = MacroState::zero(cfg.nodes);
    s.u_prev.resize(0);
    CHECK(code_of([&] { assemble_residual(s, cfg); }) == ErrorCode::MissingPreviousState);
  }

  TEST_CASE("configuration validation") {
    MacroConfig cfg = base_config();
    cfg.dt = 0.0;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
    cfg = base_config();
    cfg.nodes = 2;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
    cfg = base_config();
    cfg.coeffs.A = {0.0};
    CHECK(code_of([&] { run_simulation(cfg); }) == ErrorCode::SingularElasticity);

    nlohmann::json j = {{"length_m", 0.1},
                        {"wave", {{"mode", "abs_sine"}, {"phi0_V", 1.0}, {"speed_m_per_s", 1.0}, {"k_rad_per_m", 1.0}}},
                        {"coefficients", to_json(constant_coefficients())}};
    const MacroConfig parsed = macro_config_from_json(j);
    CHECK(parsed.coeffs.A.value == 2e9);
    CHECK(parsed.mode == Nonlinearity::Semilinear);
    j["mode"] = "cubic";
    CHECK(code_of([&] { macro_config_from_json(j); }) == ErrorCode::ConfigError);
    j["mode"] = "linear";
    j["wave"]["mode"] = "square";
    CHECK(code_of([&] { macro_config_from_json(j); }) == ErrorCode::ConfigError);
    j.erase("wave");
    CHECK(code_of([&] { macro_config_from_json(j); }) == ErrorCode::SchemaError);
    CHECK(code_of([] { macro_coefficients_from_json({{"A", 1.0}}); }) == ErrorCode::SchemaError);
  }

  TEST_CASE("coefficient JSON round trip") {
    const MacroCoefficients c = expanded_coefficients();
    const MacroCoefficients b = macro_coefficients_from_json(to_json(c));
    for (auto [x, y] : {std::pair{c.A, b.A}, std::pair{c.B, b.B}, std::pair{c.K, b.K}}) {
      CHECK(x.value == y.value);
      CHECK(x.de == y.de);
      CHECK(x.dp == y.dp);
      CHECK(x.dphi == y.dphi);
    }
  }
}
