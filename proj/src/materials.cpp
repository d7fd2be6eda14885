#include "pzflow/materials.hpp"

#include <fstream>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "pzflow/error.hpp"

namespace pzflow {

using nlohmann::json;

const RegionMaterial& MaterialSet::at(Region r) const {
  const std::string name = region_name(r);
  if (auto it = regions.find(name); it != regions.end()) return it->second;
  if (is_conductor(r))
    if (auto it = regions.find("conductor"); it != regions.end()) return it->second;
  throw Error(ErrorCode::MissingMaterial, "no material data for region " + name);
}

Mat23 MaterialSet::coupling_bar(Region r) const {
  if (!is_matrix(r)) return Mat23::Zero();
  return at(r).coupling / scale;
}

Mat2 MaterialSet::permittivity_bar(Region r) const {
  if (!is_matrix(r)) return Mat2::Zero();
  const double s = permittivity_scaling == PermittivityScaling::EpsSquared ? scale * scale : scale;
  return at(r).permittivity / s;
}

Mat3 isotropic_elasticity(double E, double nu) {
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Mat3 c;
  c << lambda + 2 * mu, lambda, 0, lambda, lambda + 2 * mu, 0, 0, 0, mu;
  return c;
}

void validate(const MaterialSet& mat) {
  if (!(mat.viscosity > 0.0)) throw Error(ErrorCode::ConfigError, "viscosity must be positive");
  if (!(mat.compressibility >= 0.0)) throw Error(ErrorCode::ConfigError, "compressibility must be non-negative");
  if (!(mat.scale > 0.0)) throw Error(ErrorCode::ConfigError, "scale eps0 must be positive");
  for (const auto& [name, m] : mat.regions) {
    const double tol = 1e-12 * m.elasticity.norm();
    if ((m.elasticity - m.elasticity.transpose()).norm() > tol)
      throw Error(ErrorCode::ConfigError, name + ": elasticity is not symmetric");
    if (Eigen::SelfAdjointEigenSolver<Mat3>(m.elasticity).eigenvalues().minCoeff() <= 0.0)
      throw Error(ErrorCode::ConfigError, name + ": elasticity is not positive definite");
    if ((m.permittivity - m.permittivity.transpose()).norm() > 1e-12 * m.permittivity.norm())
      throw Error(ErrorCode::ConfigError, name + ": permittivity is not symmetric");
    const bool matrix = name.rfind("matrix_", 0) == 0;
    if (matrix && Eigen::SelfAdjointEigenSolver<Mat2>(m.permittivity).eigenvalues().minCoeff() <= 0.0)
      throw Error(ErrorCode::ConfigError, name + ": permittivity is not positive definite");
  }
}

void check_coverage(const MaterialSet& mat, const CellMesh& mesh) {
  for (const Region& r : mesh.regions)
    if (is_solid(r)) (void)mat.at(r);
}

namespace {

template <int R, int C>
Eigen::Matrix<double, R, C> read_matrix(const json& j, const std::string& what) {
  Eigen::Matrix<double, R, C> m;
  if (!j.is_array() || j.size() != R) throw Error(ErrorCode::SchemaError, what + " must have " + std::to_string(R) + " rows");
  for (int r = 0; r < R; ++r) {
    if (!j[r].is_array() || j[r].size() != C)
      throw Error(ErrorCode::SchemaError, what + " must have " + std::to_string(C) + " columns");
    for (int c = 0; c < C; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

RegionMaterial read_region(const json& j, const std::string& name) {
  RegionMaterial m;
  const double unit = j.value("unit", 1.0);
  if (j.contains("elasticity")) {
    m.elasticity = unit * read_matrix<3, 3>(j.at("elasticity"), name + ".elasticity");
  } else if (j.contains("youngs_modulus")) {
    m.elasticity = isotropic_elasticity(j.at("youngs_modulus").get<double>(), j.at("poisson_ratio").get<double>());
  } else {
    throw Error(ErrorCode::MissingMaterial, name + " has no elasticity data");
  }
  if (j.contains("piezo_coupling")) m.coupling = read_matrix<2, 3>(j.at("piezo_coupling"), name + ".piezo_coupling");
  if (j.contains("permittivity")) {
    const double eps_unit = j.value("permittivity_unit", 1.0);
    m.permittivity = eps_unit * read_matrix<2, 2>(j.at("permittivity"), name + ".permittivity");
  } else if (name.rfind("matrix_", 0) == 0) {
    throw Error(ErrorCode::MissingMaterial, name + " has no permittivity");
  }
  return m;
}

}  // namespace

MaterialSet load_materials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingMaterial, "cannot open material file " + path);
  MaterialSet mat;
  try {
    const json j = json::parse(in);
    mat.scale = j.at("scale").get<double>();
    const std::string scaling = j.value("permittivity_scaling", std::string("eps2"));
    if (scaling == "eps2") mat.permittivity_scaling = PermittivityScaling::EpsSquared;
    else if (scaling == "eps") mat.permittivity_scaling = PermittivityScaling::Eps;
    else throw Error(ErrorCode::SchemaError, "permittivity_scaling must be 'eps2' or 'eps'");
    for (const auto& [name, jr] : j.at("regions").items()) {
      if (name != "conductor" && name != "matrix_piezo" && name != "matrix_elastic") (void)parse_region(name);
      mat.regions[name] = read_region(jr, name);
    }
    const json& f = j.at("fluid");
    mat.viscosity = f.at("viscosity").get<double>();
    mat.compressibility = f.at("compressibility").get<double>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed material file: ") + ex.what());
  }
  validate(mat);
  return mat;
}

}  // namespace pzflow
