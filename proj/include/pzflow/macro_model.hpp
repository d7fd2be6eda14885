#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "pzflow/sensitivity.hpp"

namespace pzflow {

/// Scalar coefficient with its first-order state expansion
/// X(e, p, phi) = value + de e + dp p + dphi phi.
struct ExpandedScalar {
  double value = 0.0;
  double de = 0.0, dp = 0.0, dphi = 0.0;

  double operator()(double e, double p, double phi) const { return value + de * e + dp * p + dphi * phi; }
  ExpandedScalar frozen() const { return {value, 0.0, 0.0, 0.0}; }
};

/// 1D coefficients: A = A_1111, B = B_11, M, H = H^2_11, Z = Z^2 and the
/// mobility K = K_11 / mu-bar (m^2 / (Pa s)).
struct MacroCoefficients {
  ExpandedScalar A, B, M, H, Z, K;
};

/// Reduction of the cell report to the 1D model with electrode 1 grounded
/// and electrode 2 driven.
MacroCoefficients reduce_coefficients(const HomCoeffs& h, const CoeffGradients& g);

struct Reduced1D {
  double C = 0, F = 0, K_p = 0, K_phi = 0;
};

/// C = M + B^2/A, F = Z + B H/A, K_p = dK/dp + dK/de B/A, K_phi = dK/dphi - dK/de H/A.
Reduced1D reduced_1d_coefficients(double A, double B, double M, double H, double Z, double K0, double dK_de,
                                  double dK_dp, double dK_dphi);

struct ControlWave {
  enum class Mode { AbsSine, CaseTable };
  Mode mode = Mode::AbsSine;
  // AbsSine: phi0 |sin(omega t - k x)|
  double phi0 = 0.0, omega = 0.0, k = 0.0;
  // CaseTable: 1/2 [1 + cos(psi + pi)] phi* for psi < 0, psi = b1 x1 + b2 x2 - c t + d
  double phi_star = 0.0, b1 = 0.0, b2 = 0.0, c = 0.0, d = 0.0;

  static ControlWave abs_sine(double phi0, double speed, double k) { return {Mode::AbsSine, phi0, speed * k, k}; }
  static ControlWave case_table(double phi_star, double b1, double b2, double c, double d) {
    ControlWave w;
    w.mode = Mode::CaseTable;
    w.phi_star = phi_star;
    w.b1 = b1;
    w.b2 = b2;
    w.c = c;
    w.d = d;
    return w;
  }
};

double evaluate_control(const ControlWave& wave, const Vec2& x, double t);
inline double evaluate_control(const ControlWave& wave, double x1, double t) {
  return evaluate_control(wave, Vec2(x1, 0.0), t);
}

enum class Nonlinearity { Linear, Semilinear };

struct MacroConfig {
  double length = 1.0;           // m
  int nodes = 201;
  double dt = 0.02;              // s
  int steps = 50;
  double pressure_left = 0.0;    // Pa, p on x = 0 (u = 0 there)
  double pressure_right = 0.0;   // Pa, p on x = L; traction -P n there
  ControlWave wave;
  MacroCoefficients coeffs;
  Nonlinearity mode = Nonlinearity::Semilinear;
  double newton_tol = 1e-8;
  int newton_max_iter = 20;
  double volume_force = 0.0;     // N/m^3
  double fluid_force = 0.0;      // Pa/m
  double traction = 0.0;         // Pa, added to -P n on x = L
  double h_sign = 1.0;           // sign of the H phi stress term
  int output_stride = 5;

  void validate() const;
};

/// Nodal displacement (m) and pressure (Pa) at time t with the previous step;
/// the control at t and t_prev is evaluated from the wave.
struct MacroState {
  VecX u, p;
  VecX u_prev, p_prev;
  double t = 0.0, t_prev = 0.0;

  static MacroState zero(int nodes);
};

/// Pointwise tangent coefficients: stress and mass-balance derivatives with
/// respect to (e, p) and the Darcy-term derivatives.
struct TangentCoefficients {
  double A_bar = 0, B_bar = 0;  // d sigma / de, -d sigma / dp
  double D_bar = 0, M_bar = 0;  // d mass / de, d mass / dp
  double K_bar = 0;             // mobility at the iterate
  double G_bar = 0, Q_bar = 0;  // dK/de (p' - f), dK/dp (p' - f)
};

struct PointState {
  double e = 0, p = 0, phi = 0;
  double e_prev = 0, p_prev = 0, phi_prev = 0;
  double dp = 0;  // pressure gradient
};

TangentCoefficients tangent_coefficients(const MacroCoefficients& c, const PointState& s, double fluid_force,
                                         double h_sign);

/// Coefficients used by an assembly: frozen values in linear mode.
MacroCoefficients active_coefficients(const MacroConfig& cfg);

/// Galerkin residual; unknowns ordered (u_0..u_{N-1}, p_0..p_{N-1}). Dirichlet
/// rows hold state - prescribed value. `magnitude`, when given, receives the
/// row-wise sum of absolute contributions.
VecX assemble_residual(const MacroState& s, const MacroConfig& cfg, VecX* magnitude = nullptr);

SpMat assemble_tangent(const MacroState& s, const MacroConfig& cfg);

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_norms;  // scaled, one per residual evaluation
};

/// One backward-Euler step from `prev` to time prev.t + dt.
MacroState newton_time_step(const MacroState& prev, const MacroConfig& cfg, NewtonReport* report = nullptr);

/// Seepage w = -K (p' - f) at node i, averaged over the adjacent elements.
double seepage_at_node(const MacroState& s, const MacroConfig& cfg, int i);

struct FieldSnapshot {
  int step = 0;
  double t = 0;
  VecX x, u, p, w;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> w_minus, w_mid, w_plus;
  std::vector<double> Q_minus, Q_mid, Q_plus;
  std::vector<int> newton_iters;
  std::vector<std::vector<double>> residual_histories;
  std::vector<FieldSnapshot> snapshots;
};

TimeSeries run_simulation(const MacroConfig& cfg);

/// Trapezoid accumulation of sign * w.
std::vector<double> cumulative_flux(const std::vector<double>& times, const std::vector<double>& w, double sign = 1.0);

/// Least-squares slope of Q(t) over t >= t_end / 2.
double regression_slope(const std::vector<double>& times, const std::vector<double>& Q);

struct SimulationSummary {
  double slope_minus = 0, slope_mid = 0, slope_plus = 0;
  double final_quarter_imbalance = 0;  // max |Q+ - Q-| / max(|Q+|, 1e-12) over t >= 3T/4
  int max_newton_iters = 0;
  double mean_newton_iters = 0;
};

SimulationSummary summarize(const TimeSeries& ts);

nlohmann::json to_json(const SimulationSummary& s);

/// Config parsing; `base_dir` resolves relative coefficient paths.
MacroConfig macro_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
MacroCoefficients macro_coefficients_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MacroCoefficients& c);

/// Writes fluxes.csv, fields_<k>.csv and summary.json; returns the file names.
std::vector<std::string> write_simulation_outputs(const TimeSeries& ts, const std::string& dir);

}  // namespace pzflow
