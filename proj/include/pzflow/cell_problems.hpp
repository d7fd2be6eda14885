#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "pzflow/fem_forms.hpp"

namespace pzflow {

/// Displacement and potential of one piezo corrector, full node arrays.
/// For electrode correctors `eta` holds the complete potential phi-hat.
struct PiezoPair {
  Points omega;
  VecX eta;
};

struct FlowPair {
  VecX w;   // 2 nv, periodic P2 dofs of the StokesSystem
  VecX pi;  // np
};

struct CorrectorSet {
  std::array<PiezoPair, 3> strain;  // Voigt modes 11, 22, 12
  PiezoPair pressure;
  PiezoPair charge;
  std::vector<PiezoPair> electrode;   // alpha = 1..n
  std::vector<FlowPair> permeability; // k = 1, 2; empty without fluid
  std::shared_ptr<const StokesSystem> stokes;
  double max_residual = 0.0;          // relative Galerkin residual over all solves
  bool complete = false;
};

/// Coupled elasticity/dielectric system shared by all piezo correctors:
/// a(w, v) - g(v, eta) = l_u(v), g(w, psi) + d(eta, psi) = l_psi(psi),
/// with w periodic on Y_m*, eta periodic on Y_m and zero on the conductors.
class PiezoSolver {
 public:
  explicit PiezoSolver(const CellForms& forms);

  /// Loads are full-node coefficient vectors (2N and N).
  PiezoPair solve(const VecX& load_u, const VecX& load_psi) const;

  /// Relative residual of the variational identities for (w, eta - lift).
  double residual(const PiezoPair& s, const VecX& load_u, const VecX& load_psi, const VecX& lift) const;

  Index displacement_dofs() const { return Pu_.cols(); }
  Index potential_dofs() const { return Peta_.cols(); }

 private:
  const CellForms& forms_;
  SpMat Pu_, Peta_;
  Index constraints_ = 0;
  SpMat K_;
  VecX scaling_;  // symmetric diagonal equilibration of K_
  Eigen::SparseLU<SpMat> lu_;
};

PiezoPair solve_strain_corrector(const PiezoSolver& solver, const CellForms& forms, int voigt);
PiezoPair solve_pressure_corrector(const PiezoSolver& solver, const CellForms& forms, const LoadFunctional& flux);
PiezoPair solve_charge_corrector(const PiezoSolver& solver, const CellForms& forms);
/// Potential lifting: 1 on the nodes of electrode alpha, 0 elsewhere.
VecX electrode_lifting(const CellForms& forms, int alpha);
PiezoPair solve_electrode_corrector(const PiezoSolver& solver, const CellForms& forms, int alpha);

std::vector<FlowPair> solve_permeability_correctors(const StokesSystem& stokes);

/// All families on one mesh; permeability correctors only when fluid is present.
CorrectorSet solve_all_correctors(const CellForms& forms, const CellMesh& mesh, const MaterialSet& mat);

/// One CSV per corrector family: node, x, y and field components.
std::vector<std::string> export_correctors_csv(const CorrectorSet& c, const CellMesh& mesh, const std::string& dir);

}  // namespace pzflow
