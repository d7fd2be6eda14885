#pragma once

#include <map>
#include <string>

#include "pzflow/cell_mesh.hpp"
#include "pzflow/types.hpp"

namespace pzflow {

/// Unscaled data of one solid region, 2D plane-strain Voigt layout.
struct RegionMaterial {
  Mat3 elasticity = Mat3::Zero();   // Pa, acts on (e11, e22, 2 e12)
  Mat23 coupling = Mat23::Zero();   // C/m^2, row k holds g_k11, g_k22, g_k12
  Mat2 permittivity = Mat2::Zero(); // C/(V m)
};

enum class PermittivityScaling { EpsSquared, Eps };

struct MaterialSet {
  std::map<std::string, RegionMaterial> regions;  // "matrix_piezo", "matrix_elastic", "conductor[:a]"
  double viscosity = 8.9e-4;                       // Pa s, unscaled
  double compressibility = 0.0;                    // 1/Pa
  double scale = 1.0;                              // eps0
  PermittivityScaling permittivity_scaling = PermittivityScaling::EpsSquared;

  /// Throws MissingMaterial if the region has no entry.
  const RegionMaterial& at(Region r) const;

  Mat3 elasticity(Region r) const { return at(r).elasticity; }
  /// Rescaled coupling g / eps0; zero outside the matrix.
  Mat23 coupling_bar(Region r) const;
  /// Rescaled permittivity d / eps0^2 (or d / eps0); zero outside the matrix.
  Mat2 permittivity_bar(Region r) const;
  double viscosity_bar() const { return viscosity / (scale * scale); }
};

/// Plane-strain isotropic stiffness.
Mat3 isotropic_elasticity(double youngs_modulus, double poisson_ratio);

/// Throws on broken symmetry or definiteness (MissingMaterial is reserved for absent data).
void validate(const MaterialSet& mat);

/// Throws MissingMaterial if any solid region of the mesh lacks data.
void check_coverage(const MaterialSet& mat, const CellMesh& mesh);

MaterialSet load_materials(const std::string& path);

}  // namespace pzflow
