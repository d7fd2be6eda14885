#pragma once

#include <string>
#include <vector>

#include "pzflow/cell_mesh.hpp"
#include "pzflow/materials.hpp"
#include "pzflow/types.hpp"

namespace pzflow {

/// Affine P1 triangle: area and constant gradients of the three hat functions.
struct P1Element {
  double area = 0.0;
  Eigen::Matrix<double, 2, 3> grads;
};

P1Element p1_element(const CellMesh& mesh, Index e);

/// Voigt strain-displacement operator, local dof order (2a + c).
Eigen::Matrix<double, 3, 6> strain_operator(const Eigen::Matrix<double, 2, 3>& grads);

/// Element gradient of a vector field stored as 2 x N nodal values: (grad u)_kl = d_l u_k.
Mat2 element_gradient(const CellMesh& mesh, const P1Element& el, Index e, const Points& u);
Vec2 element_gradient(const CellMesh& mesh, const P1Element& el, Index e, const VecX& phi);

struct QuadraturePoint {
  double xi, eta, weight;  // reference coordinates, weight sums to 1 over the triangle
};

/// Exact triangle rules up to degree 4; QuadratureError above.
const std::vector<QuadraturePoint>& triangle_rule(int degree);

/// Node classification under periodic identification.
struct NodeSets {
  std::vector<char> solid;      // touches Y_m*
  std::vector<char> matrix;     // touches Y_m
  std::vector<int> conductor;   // electrode index touched, 0 if none
  std::vector<char> fluid;      // touches Y_f
  std::vector<char> wall;       // touches Y_f and a solid region
};

NodeSets classify_nodes(const CellMesh& mesh, const PeriodicMap& pm);

/// Linear functional on displacement fields, v -> flux . vec(v).
struct LoadFunctional {
  VecX coefficients;  // length 2N, dof 2 v + c
  double operator()(const Points& v) const;
};

/// The averaged cell forms over full node arrays (periodic or not). Vector fields
/// are 2 x N, scalar fields length N; all forms carry the 1/|Y| factor.
struct CellForms {
  CellMesh mesh;
  PeriodicMap pm;
  NodeSets nodes;
  double measure = 0.0;
  double fluid_fraction = 0.0;
  SpMat A;  // 2N x 2N, elasticity on Y_m*
  SpMat G;  // N x 2N, psi^T G u = g(u, psi) on Y_m
  SpMat D;  // N x N, permittivity on Y_m
  LoadFunctional flux;  // -1/|Y| int_{Y_m*} div v
  VecX charge_load;     // 1/|Y| int_{Gamma_mc} psi
  VecX solid_weights;   // int_{Y_m*} of each hat function
  VecX matrix_weights;  // int_{Y_m} of each hat function

  double a(const Points& u, const Points& v) const;
  double g(const Points& u, const VecX& psi) const;
  double d(const VecX& phi, const VecX& psi) const;
};

CellForms assemble_cell_forms(const CellMesh& mesh, const MaterialSet& mat);

/// v -> 1/|Y| int_{Gamma_c} v . n  by direct facet quadrature.
LoadFunctional interface_flux_surface(const CellMesh& mesh);

/// v -> -1/|Y| int_{Y_m*} div v.
LoadFunctional interface_flux_functional(const CellMesh& mesh);

inline Eigen::Map<const VecX> flat(const Points& u) { return {u.data(), u.size()}; }
inline Eigen::Map<VecX> flat(Points& u) { return {u.data(), u.size()}; }

/// Homogeneous strain mode Pi^ij at the mesh nodes; the 12 mode is symmetrized.
Points strain_mode(const CellMesh& mesh, int voigt);
Mat2 strain_mode_gradient(int voigt);

/// Taylor-Hood P2/P1 Stokes operators on the fluid part, periodic dof numbering.
/// Velocity node ids: vertex masters first, then identified edges.
struct StokesSystem {
  Index velocity_nodes = 0;
  Index pressure_nodes = 0;
  std::vector<Index> fluid_elements;
  std::vector<std::array<Index, 6>> velocity_dofs;  // per fluid element
  std::vector<std::array<Index, 3>> pressure_dofs;  // per fluid element
  std::vector<char> velocity_active;                // fluid and off the wall
  std::vector<char> pressure_active;
  std::vector<int> pressure_component;  // connected fluid component per pressure node, -1 if none
  int components = 0;
  SpMat viscous;     // 2 nv x 2 nv, 1/|Y| int grad w : grad v, dof 2 node + c
  SpMat divergence;  // np x 2 nv, 1/|Y| int q div w
  Eigen::Matrix<double, Eigen::Dynamic, 2> rhs;  // 1/|Y| int v_k
  VecX pressure_weights;  // int of each pressure hat function
  double measure = 0.0;
  std::vector<std::string> warnings;
};

StokesSystem assemble_stokes_system(const CellMesh& mesh, const MaterialSet& mat);

/// P2 shape functions and reference gradients at (xi, eta); vertices then edges 01, 12, 20.
void p2_shape(double xi, double eta, Eigen::Matrix<double, 6, 1>& N, Eigen::Matrix<double, 2, 6>& dN);

}  // namespace pzflow
