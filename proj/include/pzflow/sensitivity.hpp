#pragma once

#include <array>
#include <string>
#include <vector>

#include "pzflow/homogenization.hpp"

namespace pzflow {

/// Shape derivatives of the averaged cell forms along a design velocity V at
/// fixed (convected) nodal fields, including the -form * mean(div V) term.
class ShapeDerivative {
 public:
  ShapeDerivative(const CellForms& forms, const MaterialSet& mat, const VelocityField& V);

  double da(const Points& u, const Points& v) const;
  double dd(const VecX& phi, const VecX& psi) const;
  double dg(const Points& u, const VecX& psi) const;
  /// Derivative of F(v) = -1/|Y| int_{Y_m*} div v.
  double dflux(const Points& v) const;
  /// Derivative of |Y_d| for the elements selected by pred: int_{Y_d} div V.
  template <typename Pred>
  double dmeasure(Pred pred) const {
    double s = 0.0;
    for (Index e = 0; e < Index(div_.size()); ++e)
      if (pred(forms_.mesh.regions[e])) s += area_[e] * div_[e];
    return s;
  }
  double dfluid_fraction() const;
  /// Surface form of d|Y_d|: boundary integral of V . n over the region.
  template <typename Pred>
  double dmeasure_surface(Pred pred) const;
  double mean_div() const { return mean_div_; }
  const Mat2& grad(Index e) const { return grad_[e]; }
  const VelocityField& velocity() const { return V_; }

 private:
  const CellForms& forms_;
  const MaterialSet& mat_;
  VelocityField V_;
  std::vector<Mat2> grad_;
  std::vector<double> div_, area_;
  double mean_div_ = 0.0;
};

template <typename Pred>
double ShapeDerivative::dmeasure_surface(Pred pred) const {
  const CellMesh& mesh = forms_.mesh;
  const PeriodicMap& pm = forms_.pm;
  double s = 0.0;
  for (const EdgeIncidence& inc : edge_incidence(mesh, pm)) {
    for (std::size_t k = 0; k < inc.sides.size(); ++k) {
      const auto [e, le] = inc.sides[k];
      if (!pred(mesh.regions[e])) continue;
      const auto [o, lo] = inc.sides[1 - k];
      if (pred(mesh.regions[o])) continue;
      const Index a = mesh.elements[e][le], b = mesh.elements[e][(le + 1) % 3];
      const Vec2 t = mesh.nodes.col(b) - mesh.nodes.col(a);
      const Vec2 n_len(t.y(), -t.x());
      s += 0.5 * (V_.values.col(a) + V_.values.col(b)).dot(n_len);
    }
  }
  return s;
}

/// Coefficient sensitivities along one velocity (S and R are not differentiated).
HomCoeffs sensitivity_of_coefficients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c,
                                      const VelocityField& V);

/// Extends a field known on the solid nodes into the fluid by a discrete
/// harmonic extension of its periodic part; `gradient` is the affine part.
VelocityField harmonic_extension(const CellForms& forms, const Points& solid_values, const Mat2& gradient);

/// Alternative extension used to probe extension independence: harmonic
/// extension plus `bump` times a field vanishing on the fluid boundary.
VelocityField bubble_extension(const CellForms& forms, const Points& solid_values, const Mat2& gradient, double bump);

/// The state velocity fields: Xi^m (m = 0..2), -omega^P, omega-hat^alpha.
std::vector<VelocityField> state_velocities(const CellForms& forms, const CorrectorSet& c);

struct CoeffGradients {
  std::array<HomCoeffs, 3> strain;  // along Xi^m, contracted with (e11, e22, 2 e12)
  HomCoeffs pressure;                // along -omega^P
  std::vector<HomCoeffs> potential;  // along omega-hat^alpha
};

CoeffGradients state_gradients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c);

/// X0 + sum_m e_m dX_m + p dX_p + sum_a phi_a dX_a, for every differentiated family.
HomCoeffs expand_coefficients(const HomCoeffs& x0, const CoeffGradients& g, const Mat2& strain, double pressure,
                              const std::vector<double>& potentials);

/// Differentiated coefficient entries flattened in a fixed order with names.
struct CoeffVector {
  std::vector<std::string> names;
  std::vector<std::string> family;
  VecX values;
};

CoeffVector flatten_sensitivities(const HomCoeffs& h);

nlohmann::json to_json(const CoeffGradients& g);
CoeffGradients gradients_from_json(const nlohmann::json& j);

/// Mesh-perturbation oracle: re-mesh, re-solve and recompute all coefficients.
class FiniteDifferenceOracle {
 public:
  FiniteDifferenceOracle(const CellMesh& mesh, const MaterialSet& mat, int budget = 1000);

  HomCoeffs at(const VelocityField& V, double tau);
  /// (X(tau V) - X(-tau V)) / (2 tau)
  HomCoeffs central(const VelocityField& V, double tau);
  int solves() const { return solves_; }

 private:
  const CellMesh& mesh_;
  const MaterialSet& mat_;
  int budget_;
  int solves_ = 0;
};

/// Smooth periodic velocity with random Fourier coefficients (deterministic per seed).
VelocityField random_periodic_velocity(const CellMesh& mesh, unsigned seed, int modes = 2);

struct AuditRow {
  std::string field;
  std::string coefficient;
  std::string family;
  double formula = 0, fd = 0, rel_error = 0;
};

struct SweepRow {
  std::string field;
  std::string family;
  std::array<double, 3> remainder{};
  double slope = 0;
};

struct AuditConfig {
  int random_fields = 5;
  unsigned seed = 7;
  double tau = 1e-5;
  std::array<double, 3> sweep_taus = {1e-3, 3e-4, 1e-4};
  bool sweep = true;
  int budget = 1000;
};

struct AuditResult {
  std::vector<AuditRow> rows;
  std::vector<SweepRow> sweep;
  double max_rel_error = 0;
  double min_slope = 0;  // over the family-normalized full remainder
  int solves = 0;
};

AuditResult run_sensitivity_audit(const CellMesh& mesh, const MaterialSet& mat, const AuditConfig& cfg);

void write_audit_csv(const AuditResult& r, const std::string& path);
void write_sweep_csv(const AuditResult& r, const std::string& path);

/// Homogenization pipeline on one mesh.
HomCoeffs homogenize(const CellMesh& mesh, const MaterialSet& mat);

}  // namespace pzflow
