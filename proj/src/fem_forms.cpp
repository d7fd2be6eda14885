#include "pzflow/fem_forms.hpp"

#include <map>
#include <numeric>

#include "pzflow/error.hpp"

namespace pzflow {

P1Element p1_element(const CellMesh& mesh, Index e) {
  const Mat2 J = element_jacobian(mesh, e);
  P1Element el;
  el.area = 0.5 * J.determinant();
  Eigen::Matrix<double, 2, 3> ref;
  ref << -1, 1, 0, -1, 0, 1;
  el.grads = J.inverse().transpose() * ref;
  return el;
}

Eigen::Matrix<double, 3, 6> strain_operator(const Eigen::Matrix<double, 2, 3>& grads) {
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int a = 0; a < 3; ++a) {
    B(0, 2 * a) = grads(0, a);
    B(1, 2 * a + 1) = grads(1, a);
    B(2, 2 * a) = grads(1, a);
    B(2, 2 * a + 1) = grads(0, a);
  }
  return B;
}

Mat2 element_gradient(const CellMesh& mesh, const P1Element& el, Index e, const Points& u) {
  const auto& t = mesh.elements[e];
  Mat23 local;
  for (int a = 0; a < 3; ++a) local.col(a) = u.col(t[a]);
  return local * el.grads.transpose();
}

Vec2 element_gradient(const CellMesh& mesh, const P1Element& el, Index e, const VecX& phi) {
  const auto& t = mesh.elements[e];
  return el.grads * Vec3(phi[t[0]], phi[t[1]], phi[t[2]]);
}

const std::vector<QuadraturePoint>& triangle_rule(int degree) {
  static const std::vector<QuadraturePoint> centroid = {{1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<QuadraturePoint> three = {
      {1.0 / 6, 1.0 / 6, 1.0 / 3}, {2.0 / 3, 1.0 / 6, 1.0 / 3}, {1.0 / 6, 2.0 / 3, 1.0 / 3}};
  static const std::vector<QuadraturePoint> six = [] {
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    return std::vector<QuadraturePoint>{{a, a, wa}, {1 - 2 * a, a, wa}, {a, 1 - 2 * a, wa},
                                        {b, b, wb}, {1 - 2 * b, b, wb}, {b, 1 - 2 * b, wb}};
  }();
  if (degree <= 1) return centroid;
  if (degree == 2) return three;
  if (degree <= 4) return six;
  throw Error(ErrorCode::QuadratureError, "no triangle rule of degree " + std::to_string(degree));
}

NodeSets classify_nodes(const CellMesh& mesh, const PeriodicMap& pm) {
  const Index n = mesh.node_count();
  NodeSets s;
  s.solid.assign(n, 0);
  s.matrix.assign(n, 0);
  s.conductor.assign(n, 0);
  s.fluid.assign(n, 0);
  s.wall.assign(n, 0);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Region r = mesh.regions[e];
    for (Index v : mesh.elements[e]) {
      const Index m = pm.master[v];
      if (is_solid(r)) s.solid[m] = 1;
      if (is_matrix(r)) s.matrix[m] = 1;
      if (is_conductor(r)) s.conductor[m] = r.electrode;
      if (is_fluid(r)) s.fluid[m] = 1;
    }
  }
  for (Index v = 0; v < n; ++v) {
    const Index m = pm.master[v];
    s.solid[v] = s.solid[m];
    s.matrix[v] = s.matrix[m];
    s.conductor[v] = s.conductor[m];
    s.fluid[v] = s.fluid[m];
    s.wall[v] = s.fluid[m] && s.solid[m];
  }
  return s;
}

double LoadFunctional::operator()(const Points& v) const { return coefficients.dot(flat(v)); }

double CellForms::a(const Points& u, const Points& v) const { return flat(u).dot(A * flat(v)); }
double CellForms::g(const Points& u, const VecX& psi) const { return psi.dot(G * flat(u)); }
double CellForms::d(const VecX& phi, const VecX& psi) const { return phi.dot(D * psi); }

LoadFunctional interface_flux_functional(const CellMesh& mesh) {
  const double inv = 1.0 / cell_measure(mesh);
  LoadFunctional f;
  f.coefficients = VecX::Zero(2 * mesh.node_count());
  for (Index e = 0; e < mesh.element_count(); ++e) {
    if (!is_solid(mesh.regions[e])) continue;
    const P1Element el = p1_element(mesh, e);
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 2; ++c) f.coefficients[2 * mesh.elements[e][a] + c] -= inv * el.area * el.grads(c, a);
  }
  return f;
}

LoadFunctional interface_flux_surface(const CellMesh& mesh) {
  const double inv = 1.0 / cell_measure(mesh);
  LoadFunctional f;
  f.coefficients = VecX::Zero(2 * mesh.node_count());
  for (const Facet& fc : mesh.facets) {
    if (fc.tag != FacetTag::FluidSolid) continue;
    const Vec2 t = mesh.nodes.col(fc.verts[1]) - mesh.nodes.col(fc.verts[0]);
    const Vec2 n_len(t.y(), -t.x());  // unit normal times facet length
    for (Index v : fc.verts)
      for (int c = 0; c < 2; ++c) f.coefficients[2 * v + c] += 0.5 * inv * n_len[c];
  }
  return f;
}

Mat2 strain_mode_gradient(int voigt) {
  Mat2 g = Mat2::Zero();
  if (voigt == 2) {
    g(0, 1) = g(1, 0) = 0.5;
  } else {
    g(voigt, voigt) = 1.0;
  }
  return g;
}

Points strain_mode(const CellMesh& mesh, int voigt) { return strain_mode_gradient(voigt) * mesh.nodes; }

CellForms assemble_cell_forms(const CellMesh& mesh, const MaterialSet& mat) {
  check_coverage(mat, mesh);
  CellForms f;
  f.mesh = mesh;
  f.pm = periodic_map(mesh);
  f.nodes = classify_nodes(mesh, f.pm);
  f.measure = cell_measure(mesh);
  f.fluid_fraction = region_measure(mesh, is_fluid) / f.measure;
  const Index n = mesh.node_count();
  const double inv = 1.0 / f.measure;

  Triplets ta, tg, td;
  f.solid_weights = VecX::Zero(n);
  f.matrix_weights = VecX::Zero(n);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Region r = mesh.regions[e];
    if (!is_solid(r)) continue;
    const auto& t = mesh.elements[e];
    const P1Element el = p1_element(mesh, e);
    const Eigen::Matrix<double, 3, 6> B = strain_operator(el.grads);
    const Eigen::Matrix<double, 6, 6> ke = inv * el.area * B.transpose() * mat.elasticity(r) * B;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) ta.emplace_back(2 * t[i / 2] + i % 2, 2 * t[j / 2] + j % 2, ke(i, j));
    for (int a = 0; a < 3; ++a) f.solid_weights[t[a]] += el.area / 3.0;
    if (!is_matrix(r)) continue;
    const Eigen::Matrix<double, 3, 6> ge = inv * el.area * el.grads.transpose() * mat.coupling_bar(r) * B;
    const Mat3 de = inv * el.area * el.grads.transpose() * mat.permittivity_bar(r) * el.grads;
    for (int a = 0; a < 3; ++a) {
      for (int j = 0; j < 6; ++j) tg.emplace_back(t[a], 2 * t[j / 2] + j % 2, ge(a, j));
      for (int b = 0; b < 3; ++b) td.emplace_back(t[a], t[b], de(a, b));
      f.matrix_weights[t[a]] += el.area / 3.0;
    }
  }
  f.A.resize(2 * n, 2 * n);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.G.resize(n, 2 * n);
  f.G.setFromTriplets(tg.begin(), tg.end());
  f.D.resize(n, n);
  f.D.setFromTriplets(td.begin(), td.end());
  f.flux = interface_flux_functional(mesh);

  f.charge_load = VecX::Zero(n);
  for (const Facet& fc : mesh.facets) {
    if (fc.tag != FacetTag::FluidSolid) continue;
    const double len = (mesh.nodes.col(fc.verts[1]) - mesh.nodes.col(fc.verts[0])).norm();
    for (Index v : fc.verts) f.charge_load[v] += 0.5 * inv * len;
  }
  return f;
}

void p2_shape(double xi, double eta, Eigen::Matrix<double, 6, 1>& N, Eigen::Matrix<double, 2, 6>& dN) {
  const double l[3] = {1.0 - xi - eta, xi, eta};
  const Vec2 dl[3] = {Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1)};
  for (int a = 0; a < 3; ++a) {
    N[a] = l[a] * (2 * l[a] - 1);
    dN.col(a) = (4 * l[a] - 1) * dl[a];
    const int b = (a + 1) % 3;
    N[3 + a] = 4 * l[a] * l[b];
    dN.col(3 + a) = 4 * (l[a] * dl[b] + l[b] * dl[a]);
  }
}

namespace {

int count_components(const std::vector<std::vector<Index>>& adjacency, std::vector<int>& label) {
  int comp = 0;
  for (std::size_t s = 0; s < adjacency.size(); ++s) {
    if (label[s] != -1) continue;
    std::vector<Index> stack{Index(s)};
    label[s] = comp;
    while (!stack.empty()) {
      const Index e = stack.back();
      stack.pop_back();
      for (Index nb : adjacency[e])
        if (label[nb] == -1) {
          label[nb] = comp;
          stack.push_back(nb);
        }
    }
    ++comp;
  }
  return comp;
}

}  // namespace

StokesSystem assemble_stokes_system(const CellMesh& mesh, const MaterialSet& mat) {
  (void)mat;  // unit viscosity: K is reported before division by the viscosity
  StokesSystem s;
  for (Index e = 0; e < mesh.element_count(); ++e)
    if (is_fluid(mesh.regions[e])) s.fluid_elements.push_back(e);
  if (s.fluid_elements.empty()) throw Error(ErrorCode::EmptyFluidRegion, "cell has no fluid elements");

  const PeriodicMap pm = periodic_map(mesh);
  const NodeSets sets = classify_nodes(mesh, pm);
  const std::vector<EdgeIncidence> edges = edge_incidence(mesh, pm);
  std::map<std::array<Index, 2>, Index> edge_id;
  for (std::size_t i = 0; i < edges.size(); ++i) edge_id[edges[i].key] = Index(i);
  s.velocity_nodes = pm.count + Index(edges.size());
  s.pressure_nodes = pm.count;
  s.measure = cell_measure(mesh);
  const double inv = 1.0 / s.measure;

  s.velocity_active.assign(s.velocity_nodes, 0);
  s.pressure_active.assign(s.pressure_nodes, 0);
  std::vector<char> wall_edge(edges.size(), 0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    bool has_fluid = false, has_solid = false;
    for (auto [e, k] : edges[i].sides) (is_fluid(mesh.regions[e]) ? has_fluid : has_solid) = true;
    wall_edge[i] = has_fluid && has_solid;
  }

  // Fluid connectivity through shared edges.
  std::map<Index, Index> local_of;
  for (std::size_t i = 0; i < s.fluid_elements.size(); ++i) local_of[s.fluid_elements[i]] = Index(i);
  std::vector<std::vector<Index>> adjacency(s.fluid_elements.size());
  for (const EdgeIncidence& inc : edges) {
    if (inc.sides.size() != 2) continue;
    const Index e0 = inc.sides[0][0], e1 = inc.sides[1][0];
    if (is_fluid(mesh.regions[e0]) && is_fluid(mesh.regions[e1])) {
      adjacency[local_of[e0]].push_back(local_of[e1]);
      adjacency[local_of[e1]].push_back(local_of[e0]);
    }
  }
  std::vector<int> elem_comp(s.fluid_elements.size(), -1);
  s.components = count_components(adjacency, elem_comp);
  if (s.components > 1)
    s.warnings.push_back("DisconnectedFluidWarning: fluid has " + std::to_string(s.components) +
                         " components; permeability may be rank-deficient");
  s.pressure_component.assign(s.pressure_nodes, -1);

  const auto& rule = triangle_rule(4);
  Triplets tv, tb;
  s.rhs = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(2 * s.velocity_nodes, 2);
  s.pressure_weights = VecX::Zero(s.pressure_nodes);
  for (std::size_t fe = 0; fe < s.fluid_elements.size(); ++fe) {
    const Index e = s.fluid_elements[fe];
    const auto& t = mesh.elements[e];
    std::array<Index, 6> vd;
    std::array<Index, 3> pd;
    for (int a = 0; a < 3; ++a) {
      vd[a] = pm.dof[t[a]];
      pd[a] = pm.dof[t[a]];
      Index m0 = pm.master[t[a]], m1 = pm.master[t[(a + 1) % 3]];
      if (m0 > m1) std::swap(m0, m1);
      const Index id = edge_id.at({m0, m1});
      vd[3 + a] = pm.count + id;
      if (!wall_edge[id]) s.velocity_active[vd[3 + a]] = 1;
      if (!sets.wall[t[a]]) s.velocity_active[vd[a]] = 1;
      s.pressure_active[pd[a]] = 1;
      s.pressure_component[pd[a]] = elem_comp[fe];
    }
    s.velocity_dofs.push_back(vd);
    s.pressure_dofs.push_back(pd);

    const Mat2 J = element_jacobian(mesh, e);
    const double area = 0.5 * J.determinant();
    const Mat2 JinvT = J.inverse().transpose();
    Eigen::Matrix<double, 6, 6> kv = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 3, 12> kb = Eigen::Matrix<double, 3, 12>::Zero();
    Eigen::Matrix<double, 6, 1> load = Eigen::Matrix<double, 6, 1>::Zero();
    Vec3 pw = Vec3::Zero();
    for (const QuadraturePoint& q : rule) {
      Eigen::Matrix<double, 6, 1> N;
      Eigen::Matrix<double, 2, 6> dN;
      p2_shape(q.xi, q.eta, N, dN);
      const Eigen::Matrix<double, 2, 6> grad = JinvT * dN;
      const Vec3 l(1.0 - q.xi - q.eta, q.xi, q.eta);
      const double w = q.weight * area * inv;
      kv += w * grad.transpose() * grad;
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 6; ++j)
          for (int c = 0; c < 2; ++c) kb(a, 2 * j + c) += w * l[a] * grad(c, j);
      load += w * N;
      pw += q.weight * area * l;
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int c = 0; c < 2; ++c) tv.emplace_back(2 * vd[i] + c, 2 * vd[j] + c, kv(i, j));
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < 12; ++j) tb.emplace_back(pd[a], 2 * vd[j / 2] + j % 2, kb(a, j));
    for (int i = 0; i < 6; ++i)
      for (int c = 0; c < 2; ++c) s.rhs(2 * vd[i] + c, c) += load[i];
    for (int a = 0; a < 3; ++a) s.pressure_weights[pd[a]] += pw[a];
  }
  s.viscous.resize(2 * s.velocity_nodes, 2 * s.velocity_nodes);
  s.viscous.setFromTriplets(tv.begin(), tv.end());
  s.divergence.resize(s.pressure_nodes, 2 * s.velocity_nodes);
  s.divergence.setFromTriplets(tb.begin(), tb.end());
  return s;
}

}  // namespace pzflow
