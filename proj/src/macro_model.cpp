#include "pzflow/macro_model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>

#include <Eigen/SparseLU>

#include "pzflow/error.hpp"

namespace pzflow {

using nlohmann::json;

MacroCoefficients reduce_coefficients(const HomCoeffs& h, const CoeffGradients& g) {
  if (h.H.size() < 2 || h.Z.size() < 2 || g.potential.size() < 2)
    throw Error(ErrorCode::ConfigError, "the 1D reduction needs two electrodes");
  auto pick = [&](auto get) {
    return ExpandedScalar{get(h), get(g.strain[0]), get(g.pressure), get(g.potential[1])};
  };
  MacroCoefficients c;
  c.A = pick([](const HomCoeffs& x) { return x.A(0, 0); });
  c.B = pick([](const HomCoeffs& x) { return x.B(0, 0); });
  c.M = pick([](const HomCoeffs& x) { return x.M; });
  c.H = pick([](const HomCoeffs& x) { return x.H[1](0, 0); });
  c.Z = pick([](const HomCoeffs& x) { return x.Z[1]; });
  const double mu = h.viscosity_bar;
  c.K = pick([mu](const HomCoeffs& x) { return x.K(0, 0) / mu; });
  return c;
}

Reduced1D reduced_1d_coefficients(double A, double B, double M, double H, double Z, double K0, double dK_de,
                                  double dK_dp, double dK_dphi) {
  (void)K0;
  if (A == 0.0) throw Error(ErrorCode::SingularElasticity, "1D elasticity coefficient is zero");
  return {M + B * B / A, Z + B * H / A, dK_dp + dK_de * B / A, dK_dphi - dK_de * H / A};
}

double evaluate_control(const ControlWave& w, const Vec2& x, double t) {
  if (w.mode == ControlWave::Mode::AbsSine) return w.phi0 * std::abs(std::sin(w.omega * t - w.k * x[0]));
  const double psi = w.b1 * x[0] + w.b2 * x[1] - w.c * t + w.d;
  return psi < 0.0 ? 0.5 * (1.0 + std::cos(psi + std::numbers::pi)) * w.phi_star : 0.0;
}

void MacroConfig::validate() const {
  if (!(length > 0.0)) throw Error(ErrorCode::ConfigError, "domain length must be positive");
  if (nodes < 3) throw Error(ErrorCode::ConfigError, "at least 3 nodes are required");
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "time step must be positive");
  if (steps < 0) throw Error(ErrorCode::ConfigError, "step count must be non-negative");
  if (!(newton_tol > 0.0)) throw Error(ErrorCode::ConfigError, "Newton tolerance must be positive");
  if (newton_max_iter < 1) throw Error(ErrorCode::ConfigError, "Newton iteration limit must be at least 1");
  if (output_stride < 1) throw Error(ErrorCode::ConfigError, "output stride must be at least 1");
  if (coeffs.A.value == 0.0) throw Error(ErrorCode::SingularElasticity, "1D elasticity coefficient is zero");
}

MacroState MacroState::zero(int nodes) {
  MacroState s;
  s.u = s.p = s.u_prev = s.p_prev = VecX::Zero(nodes);
  return s;
}

TangentCoefficients tangent_coefficients(const MacroCoefficients& c, const PointState& s, double f, double h_sign) {
  const double A = c.A(s.e, s.p, s.phi), B = c.B(s.e, s.p, s.phi), M = c.M(s.e, s.p, s.phi);
  const double de = s.e - s.e_prev, dp = s.p - s.p_prev, dphi = s.phi - s.phi_prev;
  TangentCoefficients t;
  t.A_bar = A + c.A.de * s.e - s.p * c.B.de + h_sign * c.H.de * s.phi;
  t.B_bar = B + s.p * c.B.dp - c.A.dp * s.e - h_sign * c.H.dp * s.phi;
  t.D_bar = B + c.B.de * de + c.M.de * dp - c.Z.de * dphi;
  t.M_bar = M + c.B.dp * de + c.M.dp * dp - c.Z.dp * dphi;
  t.K_bar = c.K(s.e, s.p, s.phi);
  t.G_bar = c.K.de * (s.dp - f);
  t.Q_bar = c.K.dp * (s.dp - f);
  return t;
}

MacroCoefficients active_coefficients(const MacroConfig& cfg) {
  if (cfg.mode == Nonlinearity::Semilinear) return cfg.coeffs;
  const MacroCoefficients& c = cfg.coeffs;
  return {c.A.frozen(), c.B.frozen(), c.M.frozen(), c.H.frozen(), c.Z.frozen(), c.K.frozen()};
}

namespace {

constexpr std::array<double, 2> kGaussX = {0.5 - 0.5 / std::numbers::sqrt3, 0.5 + 0.5 / std::numbers::sqrt3};

void check_state(const MacroState& s, const MacroConfig& cfg) {
  const Index n = cfg.nodes;
  if (s.u.size() != n || s.p.size() != n)
    throw Error(ErrorCode::ConfigError, "state size does not match the grid");
  if (s.u_prev.size() != n || s.p_prev.size() != n)
    throw Error(ErrorCode::MissingPreviousState, "previous-step state is missing");
}

/// Element-local quantities at one quadrature point.
struct ElementPoint {
  PointState s;
  double N0, N1, weight;
};

ElementPoint element_point(const MacroState& st, const MacroConfig& cfg, Index el, double xi) {
  const double h = cfg.length / (cfg.nodes - 1);
  const double x = (el + xi) * h;
  ElementPoint ep;
  ep.N0 = 1.0 - xi;
  ep.N1 = xi;
  ep.weight = 0.5 * h;
  PointState& s = ep.s;
  s.e = (st.u[el + 1] - st.u[el]) / h;
  s.e_prev = (st.u_prev[el + 1] - st.u_prev[el]) / h;
  s.p = ep.N0 * st.p[el] + ep.N1 * st.p[el + 1];
  s.p_prev = ep.N0 * st.p_prev[el] + ep.N1 * st.p_prev[el + 1];
  s.dp = (st.p[el + 1] - st.p[el]) / h;
  s.phi = evaluate_control(cfg.wave, x, st.t);
  s.phi_prev = evaluate_control(cfg.wave, x, st.t_prev);
  return ep;
}

}  // namespace

VecX assemble_residual(const MacroState& st, const MacroConfig& cfg, VecX* magnitude) {
  check_state(st, cfg);
  const Index n = cfg.nodes;
  const double h = cfg.length / (n - 1);
  const MacroCoefficients c = active_coefficients(cfg);
  VecX r = VecX::Zero(2 * n);
  VecX mag = VecX::Zero(2 * n);
  for (Index el = 0; el + 1 < n; ++el) {
    for (double xi : kGaussX) {
      const ElementPoint ep = element_point(st, cfg, el, xi);
      const PointState& s = ep.s;
      const double A = c.A(s.e, s.p, s.phi), B = c.B(s.e, s.p, s.phi), M = c.M(s.e, s.p, s.phi);
      const double H = c.H(s.e, s.p, s.phi), Z = c.Z(s.e, s.p, s.phi), K = c.K(s.e, s.p, s.phi);
      const double sigma = A * s.e - s.p * B + cfg.h_sign * H * s.phi;
      const double sigma_mag = std::abs(A * s.e) + std::abs(s.p * B) + std::abs(H * s.phi);
      const double mass = B * (s.e - s.e_prev) + M * (s.p - s.p_prev) - Z * (s.phi - s.phi_prev);
      const double mass_mag =
          std::abs(B * (s.e - s.e_prev)) + std::abs(M * (s.p - s.p_prev)) + std::abs(Z * (s.phi - s.phi_prev));
      const double darcy = cfg.dt * K * (s.dp - cfg.fluid_force);
      const double w = ep.weight;
      const std::array<double, 2> N = {ep.N0, ep.N1}, dN = {-1.0 / h, 1.0 / h};
      for (int a = 0; a < 2; ++a) {
        const Index i = el + a;
        r[i] += w * (sigma * dN[a] - cfg.volume_force * N[a]);
        mag[i] += w * (sigma_mag * std::abs(dN[a]) + std::abs(cfg.volume_force * N[a]));
        r[n + i] += w * (N[a] * mass + darcy * dN[a]);
        mag[n + i] += w * (N[a] * mass_mag + std::abs(darcy * dN[a]));
      }
    }
  }
  r[n - 1] += cfg.pressure_right - cfg.traction;
  mag[n - 1] += std::abs(cfg.pressure_right) + std::abs(cfg.traction);
  r[0] = st.u[0];
  r[n] = st.p[0] - cfg.pressure_left;
  r[2 * n - 1] = st.p[n - 1] - cfg.pressure_right;
  mag[0] = std::abs(st.u[0]);
  mag[n] = std::abs(st.p[0]) + std::abs(cfg.pressure_left);
  mag[2 * n - 1] = std::abs(st.p[n - 1]) + std::abs(cfg.pressure_right);
  if (magnitude) *magnitude = mag;
  return r;
}

SpMat assemble_tangent(const MacroState& st, const MacroConfig& cfg) {
  check_state(st, cfg);
  const Index n = cfg.nodes;
  const double h = cfg.length / (n - 1);
  const MacroCoefficients c = active_coefficients(cfg);
  Triplets trip;
  trip.reserve(32 * n);
  auto is_dirichlet = [n](Index row) { return row == 0 || row == n || row == 2 * n - 1; };
  for (Index el = 0; el + 1 < n; ++el) {
    for (double xi : kGaussX) {
      const ElementPoint ep = element_point(st, cfg, el, xi);
      const TangentCoefficients t = tangent_coefficients(c, ep.s, cfg.fluid_force, cfg.h_sign);
      const double w = ep.weight;
      const std::array<double, 2> N = {ep.N0, ep.N1}, dN = {-1.0 / h, 1.0 / h};
      for (int a = 0; a < 2; ++a) {
        const Index iu = el + a, ip = n + el + a;
        for (int b = 0; b < 2; ++b) {
          const Index ju = el + b, jp = n + el + b;
          // stress row: d sigma = A_bar de - B_bar dp
          if (!is_dirichlet(iu)) {
            trip.emplace_back(iu, ju, w * t.A_bar * dN[b] * dN[a]);
            trip.emplace_back(iu, jp, -w * t.B_bar * N[b] * dN[a]);
          }
          // mass and Darcy row
          if (!is_dirichlet(ip)) {
            trip.emplace_back(ip, ju, w * (N[a] * t.D_bar * dN[b] + cfg.dt * t.G_bar * dN[b] * dN[a]));
            trip.emplace_back(ip, jp,
                              w * (N[a] * t.M_bar * N[b] + cfg.dt * (t.K_bar * dN[b] + t.Q_bar * N[b]) * dN[a]));
          }
        }
      }
    }
  }
  for (Index row : {Index(0), n, 2 * n - 1}) trip.emplace_back(row, row, 1.0);
  SpMat J(2 * n, 2 * n);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

namespace {

struct BlockNorms {
  double u = 0, p = 0, u_mag = 0, p_mag = 0;
};

BlockNorms block_norms(const VecX& r, const VecX& mag, Index n) {
  return {r.head(n).norm(), r.tail(n).norm(), mag.head(n).norm(), mag.tail(n).norm()};
}

}  // namespace

MacroState newton_time_step(const MacroState& prev, const MacroConfig& cfg, NewtonReport* report) {
  check_state(prev, cfg);
  const Index n = cfg.nodes;
  MacroState s;
  s.u_prev = prev.u;
  s.p_prev = prev.p;
  s.t_prev = prev.t;
  s.t = prev.t + cfg.dt;
  s.u = prev.u;
  s.p = prev.p;
  s.u[0] = 0.0;
  s.p[0] = cfg.pressure_left;
  s.p[n - 1] = cfg.pressure_right;

  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = NewtonReport{};
  VecX mag;
  VecX r = assemble_residual(s, cfg, &mag);
  const BlockNorms r0 = block_norms(r, mag, n);
  const double ref_u = r0.u > 0.0 ? r0.u : 1.0, ref_p = r0.p > 0.0 ? r0.p : 1.0;
  constexpr double kRoundoff = 1e-12;
  rep.residual_norms.push_back(std::hypot(r0.u / ref_u, r0.p / ref_p));

  for (int it = 1; it <= cfg.newton_max_iter; ++it) {
    const SpMat J = assemble_tangent(s, cfg);
    VecX scale(2 * n);
    for (Index i = 0; i < 2 * n; ++i) {
      const double d = std::abs(J.coeff(i, i));
      scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    const SpMat Js = scale.asDiagonal() * J * scale.asDiagonal();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(Js);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::LinearSolveFailure, "macro tangent factorization failed");
    const VecX y = lu.solve(VecX(-scale.cwiseProduct(r)));
    if (lu.info() != Eigen::Success || !y.allFinite())
      throw Error(ErrorCode::LinearSolveFailure, "macro tangent solve failed");
    const VecX delta = scale.cwiseProduct(y);
    s.u += delta.head(n);
    s.p += delta.tail(n);
    r = assemble_residual(s, cfg, &mag);
    const BlockNorms b = block_norms(r, mag, n);
    rep.iterations = it;
    rep.residual_norms.push_back(std::hypot(b.u / ref_u, b.p / ref_p));
    if (!r.allFinite()) break;
    const bool u_ok = b.u <= std::max(cfg.newton_tol * r0.u, kRoundoff * b.u_mag);
    const bool p_ok = b.p <= std::max(cfg.newton_tol * r0.p, kRoundoff * b.p_mag);
    if (u_ok && p_ok) return s;
  }
  throw Error(ErrorCode::NewtonDivergence,
              "Newton iteration did not converge at t = " + std::to_string(s.t));
}

double seepage_at_node(const MacroState& st, const MacroConfig& cfg, int i) {
  const Index n = cfg.nodes;
  const double h = cfg.length / (n - 1);
  const MacroCoefficients c = active_coefficients(cfg);
  const double phi = evaluate_control(cfg.wave, i * h, st.t);
  double sum = 0.0;
  int count = 0;
  for (Index el : {Index(i) - 1, Index(i)}) {
    if (el < 0 || el + 1 >= n) continue;
    const double e = (st.u[el + 1] - st.u[el]) / h;
    const double dp = (st.p[el + 1] - st.p[el]) / h;
    sum += -c.K(e, st.p[i], phi) * (dp - cfg.fluid_force);
    ++count;
  }
  return sum / count;
}

std::vector<double> cumulative_flux(const std::vector<double>& times, const std::vector<double>& w, double sign) {
  std::vector<double> Q(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k)
    Q[k] = Q[k - 1] + sign * 0.5 * (w[k] + w[k - 1]) * (times[k] - times[k - 1]);
  return Q;
}

double regression_slope(const std::vector<double>& times, const std::vector<double>& Q) {
  if (times.empty()) return 0.0;
  const double t_half = 0.5 * (times.front() + times.back());
  double n = 0, st = 0, sq = 0, stt = 0, stq = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_half) continue;
    n += 1;
    st += times[k];
    sq += Q[k];
    stt += times[k] * times[k];
    stq += times[k] * Q[k];
  }
  const double den = n * stt - st * st;
  return den > 0.0 ? (n * stq - st * sq) / den : 0.0;
}

namespace {

FieldSnapshot snapshot(const MacroState& s, const MacroConfig& cfg, int step) {
  const Index n = cfg.nodes;
  FieldSnapshot f;
  f.step = step;
  f.t = s.t;
  f.x = VecX::LinSpaced(n, 0.0, cfg.length);
  f.u = s.u;
  f.p = s.p;
  f.w.resize(n);
  for (Index i = 0; i < n; ++i) f.w[i] = seepage_at_node(s, cfg, int(i));
  return f;
}

}  // namespace

TimeSeries run_simulation(const MacroConfig& cfg) {
  cfg.validate();
  const int n = cfg.nodes;
  const int mid = (n - 1) / 2;
  TimeSeries ts;
  MacroState s = MacroState::zero(n);
  auto record = [&](int step, int iters, std::vector<double> history) {
    ts.times.push_back(s.t);
    ts.w_minus.push_back(seepage_at_node(s, cfg, 0));
    ts.w_mid.push_back(seepage_at_node(s, cfg, mid));
    ts.w_plus.push_back(seepage_at_node(s, cfg, n - 1));
    ts.newton_iters.push_back(iters);
    ts.residual_histories.push_back(std::move(history));
    if (step % cfg.output_stride == 0 || step == cfg.steps) ts.snapshots.push_back(snapshot(s, cfg, step));
  };
  record(0, 0, {});
  for (int k = 1; k <= cfg.steps; ++k) {
    NewtonReport rep;
    s = newton_time_step(s, cfg, &rep);
    record(k, rep.iterations, rep.residual_norms);
  }
  ts.Q_minus = cumulative_flux(ts.times, ts.w_minus);
  ts.Q_mid = cumulative_flux(ts.times, ts.w_mid);
  ts.Q_plus = cumulative_flux(ts.times, ts.w_plus);
  return ts;
}

SimulationSummary summarize(const TimeSeries& ts) {
  SimulationSummary s;
  s.slope_minus = regression_slope(ts.times, ts.Q_minus);
  s.slope_mid = regression_slope(ts.times, ts.Q_mid);
  s.slope_plus = regression_slope(ts.times, ts.Q_plus);
  if (!ts.times.empty()) {
    const double t_quarter = ts.times.front() + 0.75 * (ts.times.back() - ts.times.front());
    for (std::size_t k = 0; k < ts.times.size(); ++k)
      if (ts.times[k] >= t_quarter)
        s.final_quarter_imbalance = std::max(s.final_quarter_imbalance, std::abs(ts.Q_plus[k] - ts.Q_minus[k]) /
                                                                            std::max(std::abs(ts.Q_plus[k]), 1e-12));
  }
  int total = 0, steps = 0;
  for (std::size_t k = 1; k < ts.newton_iters.size(); ++k) {
    s.max_newton_iters = std::max(s.max_newton_iters, ts.newton_iters[k]);
    total += ts.newton_iters[k];
    ++steps;
  }
  s.mean_newton_iters = steps ? double(total) / steps : 0.0;
  return s;
}

json to_json(const SimulationSummary& s) {
  return {{"slope_Q_minus", s.slope_minus},
          {"slope_Q_mid", s.slope_mid},
          {"slope_Q_plus", s.slope_plus},
          {"final_quarter_imbalance", s.final_quarter_imbalance},
          {"max_newton_iters", s.max_newton_iters},
          {"mean_newton_iters", s.mean_newton_iters}};
}

namespace {

ExpandedScalar scalar_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return {j.at("value").get<double>(), j.value("de", 0.0), j.value("dp", 0.0), j.value("dphi", 0.0)};
}

json scalar_to_json(const ExpandedScalar& s) {
  return {{"value", s.value}, {"de", s.de}, {"dp", s.dp}, {"dphi", s.dphi}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + ex.what());
  }
}

}  // namespace

MacroCoefficients macro_coefficients_from_json(const json& j) {
  try {
    MacroCoefficients c;
    c.A = scalar_from_json(j.at("A"));
    c.B = scalar_from_json(j.at("B"));
    c.M = scalar_from_json(j.at("M"));
    c.H = scalar_from_json(j.at("H"));
    c.Z = scalar_from_json(j.at("Z"));
    c.K = scalar_from_json(j.at("K"));
    return c;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed 1D coefficients: ") + ex.what());
  }
}

json to_json(const MacroCoefficients& c) {
  return {{"A", scalar_to_json(c.A)}, {"B", scalar_to_json(c.B)}, {"M", scalar_to_json(c.M)},
          {"H", scalar_to_json(c.H)}, {"Z", scalar_to_json(c.Z)}, {"K", scalar_to_json(c.K)}};
}

MacroConfig macro_config_from_json(const json& j, const std::string& base_dir) {
  MacroConfig cfg;
  try {
    cfg.length = j.at("length_m").get<double>();
    cfg.nodes = j.value("nodes", cfg.nodes);
    cfg.dt = j.value("dt_s", cfg.dt);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.pressure_left = j.value("pressure_left_Pa", 0.0);
    cfg.pressure_right = j.value("pressure_right_Pa", 0.0);
    const std::string mode = j.value("mode", std::string("semilinear"));
    if (mode == "linear")
      cfg.mode = Nonlinearity::Linear;
    else if (mode == "semilinear")
      cfg.mode = Nonlinearity::Semilinear;
    else
      throw Error(ErrorCode::ConfigError, "unknown mode '" + mode + "'");
    cfg.newton_tol = j.value("newton_tol", cfg.newton_tol);
    cfg.newton_max_iter = j.value("newton_max_iter", cfg.newton_max_iter);
    cfg.volume_force = j.value("volume_force_N_per_m3", 0.0);
    cfg.fluid_force = j.value("fluid_force_Pa_per_m", 0.0);
    cfg.traction = j.value("traction_Pa", 0.0);
    cfg.h_sign = j.value("h_sign", 1.0);
    cfg.output_stride = j.value("output_stride", cfg.output_stride);

    const json& w = j.at("wave");
    const std::string kind = w.at("mode").get<std::string>();
    if (kind == "abs_sine")
      cfg.wave = ControlWave::abs_sine(w.at("phi0_V").get<double>(), w.at("speed_m_per_s").get<double>(),
                                      w.at("k_rad_per_m").get<double>());
    else if (kind == "case_table")
      cfg.wave = ControlWave::case_table(w.at("phi_star_V").get<double>(), w.at("b1_rad_per_m").get<double>(),
                                         w.value("b2_rad_per_m", 0.0), w.at("c_rad_per_s").get<double>(),
                                         w.value("d_rad", 0.0));
    else
      throw Error(ErrorCode::ConfigError, "unknown wave mode '" + kind + "'");

    const json& cj = j.at("coefficients");
    if (cj.contains("report")) {
      const std::filesystem::path base(base_dir);
      const HomCoeffs h = coeffs_from_json(read_json_file(base / cj.at("report").get<std::string>()));
      const CoeffGradients g = gradients_from_json(read_json_file(base / cj.at("gradients").get<std::string>()));
      cfg.coeffs = reduce_coefficients(h, g);
    } else {
      cfg.coeffs = macro_coefficients_from_json(cj);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed simulation config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> write_simulation_outputs(const TimeSeries& ts, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  {
    std::ofstream out(fs::path(dir) / "fluxes.csv");
    out << std::setprecision(17) << "# pzflow fluxes v1\nt,Q_minus,Q_mid,Q_plus,newton_iters\n";
    for (std::size_t k = 0; k < ts.times.size(); ++k)
      out << ts.times[k] << ',' << ts.Q_minus[k] << ',' << ts.Q_mid[k] << ',' << ts.Q_plus[k] << ','
          << ts.newton_iters[k] << '\n';
    files.push_back("fluxes.csv");
  }
  for (const FieldSnapshot& f : ts.snapshots) {
    const std::string name = "fields_" + std::to_string(f.step) + ".csv";
    std::ofstream out(fs::path(dir) / name);
    out << std::setprecision(17) << "# pzflow fields v1; t = " << f.t << "\nx,u,p,w\n";
    for (Index i = 0; i < f.x.size(); ++i) out << f.x[i] << ',' << f.u[i] << ',' << f.p[i] << ',' << f.w[i] << '\n';
    files.push_back(name);
  }
  {
    std::ofstream out(fs::path(dir) / "summary.json");
    out << std::setprecision(17) << to_json(summarize(ts)).dump(2) << '\n';
    files.push_back("summary.json");
  }
  return files;
}

}  // namespace pzflow
