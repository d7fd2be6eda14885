#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pzflow/cell_problems.hpp"

namespace pzflow {

/// Homogenized coefficients. Second-order tensors are full 2x2 matrices; the
/// fourth-order A is stored in Voigt form, A(m, n) = A_ijkl with ij = mode m.
struct HomCoeffs {
  Mat3 A = Mat3::Zero();
  Mat2 B = Mat2::Zero();
  double M = 0.0;
  std::vector<Mat2> H;  // per electrode
  Mat2 S = Mat2::Zero();
  double R = 0.0;
  std::vector<double> Z;  // per electrode
  Mat2 K = Mat2::Zero();  // cell units, before division by the viscosity
  double fluid_fraction = 0.0;
  double compressibility = 0.0;
  double scale = 1.0;
  double viscosity_bar = 1.0;
  double B_identity_gap = 0.0;  // max |B - (F(omega^ij) + phi_f delta_ij)|
};

HomCoeffs compute_coefficients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c);

/// Fourth-order tensor A_ijkl from non-symmetrized strain modes, index 2i + j.
Eigen::Matrix<double, 4, 4> full_elasticity_tensor(const CellForms& forms);

/// Largest symmetry defect over A (major/minor), B, S, H and K, relative to the tensor norms.
double symmetry_defect(const HomCoeffs& h);

nlohmann::json to_json(const HomCoeffs& h);
HomCoeffs coeffs_from_json(const nlohmann::json& j);

struct MicroDisplacement {
  Points fluctuation;  // u^1
  Points total;        // Pi : e + u^1
};

MicroDisplacement reconstruct_micro_displacement(const CorrectorSet& c, const CellMesh& mesh, const Mat2& strain,
                                                 double pressure, const std::vector<double>& potentials,
                                                 double charge = 0.0);

}  // namespace pzflow
