#include <filesystem>
#include <fstream>

#include <Eigen/SparseCholesky>

#include "doctest.h"
#include "pzflow/cell_problems.hpp"
#include "pzflow/error.hpp"

using namespace pzflow;

namespace {

MaterialSet base_materials() { return load_materials(std::string(PZFLOW_DATA_DIR) + "/materials.json"); }

MaterialSet uncoupled(MaterialSet mat) {
  for (auto& [name, r] : mat.regions) r.coupling.setZero();
  return mat;
}

double max_abs(const Points& p) { return p.size() ? p.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const VecX& p) { return p.size() ? p.cwiseAbs().maxCoeff() : 0.0; }

// Two-phase laminate: piezo for y1 < 1/2, elastic above.
CellMesh laminate(int n) {
  CellMesh mesh = generate_uniform_cell(n, piezo());
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const double cx = (mesh.nodes(0, t[0]) + mesh.nodes(0, t[1]) + mesh.nodes(0, t[2])) / 3.0;
    if (cx > 0.5) mesh.regions[e] = elastic();
  }
  mesh.facets = derive_facets(mesh);
  return mesh;
}

// Independent periodic P1 Laplace solve on the matrix with phi = 1 on electrode
// `alpha`, 0 on the other conductors.
VecX dielectric_potential(const CellMesh& mesh, int alpha) {
  const PeriodicMap pm = periodic_map(mesh);
  const Index n = mesh.node_count();
  std::vector<char> in_matrix(n, 0);
  std::vector<int> on_conductor(n, 0);
  for (Index e = 0; e < mesh.element_count(); ++e)
    for (Index v : mesh.elements[e]) {
      if (is_matrix(mesh.regions[e])) in_matrix[pm.dof[v]] = 1;
      if (is_conductor(mesh.regions[e])) on_conductor[pm.dof[v]] = mesh.regions[e].electrode;
    }
  Triplets t;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    if (!is_matrix(mesh.regions[e])) continue;
    const auto& tri = mesh.elements[e];
    Eigen::Matrix<double, 2, 2> J;
    J.col(0) = mesh.nodes.col(tri[1]) - mesh.nodes.col(tri[0]);
    J.col(1) = mesh.nodes.col(tri[2]) - mesh.nodes.col(tri[0]);
    Eigen::Matrix<double, 2, 3> ref;
    ref << -1, 1, 0, -1, 0, 1;
    const Eigen::Matrix<double, 2, 3> g = J.inverse().transpose() * ref;
    const Mat3 k = 0.5 * std::abs(J.determinant()) * g.transpose() * g;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) t.emplace_back(pm.dof[tri[a]], pm.dof[tri[b]], k(a, b));
  }
  SpMat L(pm.count, pm.count);
  L.setFromTriplets(t.begin(), t.end());
  VecX fixed = VecX::Zero(pm.count);
  std::vector<Index> free;
  for (Index d = 0; d < pm.count; ++d) {
    if (on_conductor[d]) fixed[d] = on_conductor[d] == alpha ? 1.0 : 0.0;
    else if (in_matrix[d]) free.push_back(d);
  }
  SpMat P(pm.count, Index(free.size()));
  Triplets tp;
  for (Index i = 0; i < Index(free.size()); ++i) tp.emplace_back(free[i], i, 1.0);
  P.setFromTriplets(tp.begin(), tp.end());
  Eigen::SimplicialLDLT<SpMat> solver(SpMat(P.transpose() * L * P));
  const VecX x = solver.solve(-(P.transpose() * (L * fixed)));
  const VecX full = fixed + P * x;
  VecX out(n);
  for (Index v = 0; v < n; ++v) out[v] = full[pm.dof[v]];
  return out;
}

}  // namespace

TEST_SUITE("cell_problems") {
  TEST_CASE("homogeneous cell has vanishing correctors") {
    const MaterialSet mat = base_materials();
    const CellMesh mesh = generate_uniform_cell(8, piezo());
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    for (const PiezoPair& s : c.strain) {
      CHECK(max_abs(s.omega) < 1e-12);
      CHECK(max_abs(s.eta) < 1e-12);
    }
    CHECK(max_abs(c.pressure.omega) == 0.0);
    CHECK(c.permeability.empty());
    CHECK(c.complete);
  }

  TEST_CASE("laminate gives the harmonic mean") {
    const MaterialSet mat = uncoupled(base_materials());
    const CellMesh mesh = laminate(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    const Points pi = strain_mode(mesh, 0);
    const Points total = pi + c.strain[0].omega;
    const double a1 = mat.elasticity(piezo())(0, 0), a2 = mat.elasticity(elastic())(0, 0);
    const double harmonic = 2.0 / (1.0 / a1 + 1.0 / a2);
    CHECK(f.a(total, pi) == doctest::Approx(harmonic).epsilon(1e-10));
    CHECK(c.max_residual < 1e-10);
  }

  TEST_CASE("canonical cell residuals") {
    const MaterialSet mat = base_materials();
    const CellMesh mesh = generate_canonical_cell(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    CHECK(c.max_residual < 1e-10);
    CHECK(c.electrode.size() == 2);
    REQUIRE(c.permeability.size() == 2);
    // Electrode potentials vanish on the other conductor.
    for (int a = 1; a <= 2; ++a) {
      const VecX lift = electrode_lifting(f, a);
      for (Index v = 0; v < mesh.node_count(); ++v)
        if (f.nodes.conductor[v] == a) CHECK(c.electrode[a - 1].eta[v] == doctest::Approx(1.0));
        else if (f.nodes.conductor[v] != 0) CHECK(c.electrode[a - 1].eta[v] == doctest::Approx(0.0));
      CHECK(lift.maxCoeff() == 1.0);
    }
  }

  TEST_CASE("pressure corrector") {
    MaterialSet mat = base_materials();
    const CellMesh solid = generate_uniform_cell(8, piezo());
    const CellForms fs = assemble_cell_forms(solid, mat);
    const CorrectorSet cs = solve_all_correctors(fs, solid, mat);
    CHECK(max_abs(cs.pressure.omega) == 0.0);
    CHECK(max_abs(cs.pressure.eta) == 0.0);

    const CellMesh mesh = generate_canonical_cell(16);
    const double base = max_abs(solve_all_correctors(assemble_cell_forms(mesh, mat), mesh, mat).pressure.omega);
    for (auto& [name, r] : mat.regions) {
      r.elasticity *= 1e6;
      r.coupling *= 1e3;  // keeps the coupling-to-stiffness ratio of the electro-mechanical block
    }
    const double stiff = max_abs(solve_all_correctors(assemble_cell_forms(mesh, mat), mesh, mat).pressure.omega);
    CHECK(stiff / base == doctest::Approx(1e-6).epsilon(1e-6));
  }

  TEST_CASE("charge load and uncoupled charge corrector") {
    const MaterialSet mat = uncoupled(base_materials());
    const CellMesh mesh = generate_canonical_cell(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    // Two matrix/fluid lines of unit length in a unit cell.
    CHECK(f.charge_load.sum() == doctest::Approx(2.0).epsilon(1e-12));
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    CHECK(max_abs(c.charge.omega) == 0.0);
  }

  TEST_CASE("uncoupled electrode correctors") {
    const MaterialSet mat = uncoupled(base_materials());
    const CellMesh mesh = generate_canonical_cell(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    VecX sum = VecX::Zero(mesh.node_count());
    for (const PiezoPair& e : c.electrode) {
      CHECK(max_abs(e.omega) == 0.0);
      sum += e.eta;
    }
    for (Index v = 0; v < mesh.node_count(); ++v)
      if (f.nodes.matrix[v]) CHECK(sum[v] == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("electrode potential against an independent dielectric solve") {
    MaterialSet mat = uncoupled(base_materials());
    const double s2 = mat.scale * mat.scale;
    for (auto& [name, r] : mat.regions)
      if (name.rfind("matrix", 0) == 0) r.permittivity = s2 * Mat2::Identity();
    const CellMesh mesh = generate_canonical_cell(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    const VecX oracle = dielectric_potential(mesh, 1);
    double err = 0.0;
    for (Index v = 0; v < mesh.node_count(); ++v)
      if (f.nodes.matrix[v]) err = std::max(err, std::abs(c.electrode[0].eta[v] - oracle[v]));
    CHECK(err < 1e-10);
  }

  TEST_CASE("Poiseuille permeability and incompressibility") {
    const MaterialSet mat = base_materials();
    const StokesSystem st = assemble_stokes_system(generate_canonical_cell(16), mat);
    const std::vector<FlowPair> w = solve_permeability_correctors(st);
    const double K11 = st.rhs.col(0).dot(w[0].w);
    CHECK(K11 == doctest::Approx(std::pow(0.25, 3) / 12.0).epsilon(1e-10));
    CHECK(std::abs(st.rhs.col(1).dot(w[1].w)) < 1e-6 * K11);
    for (const FlowPair& p : w) {
      const VecX div = st.divergence * p.w;
      for (Index q = 0; q < div.size(); ++q)
        if (st.pressure_active[q]) CHECK(std::abs(div[q]) < 1e-10);
    }
  }

  TEST_CASE("corrector export") {
    const MaterialSet mat = base_materials();
    const CellMesh mesh = generate_canonical_cell(16);
    const CellForms f = assemble_cell_forms(mesh, mat);
    const CorrectorSet c = solve_all_correctors(f, mesh, mat);
    const std::string dir = std::string(PZFLOW_TEST_TMP) + "/correctors";
    std::filesystem::create_directories(dir);
    const auto files = export_correctors_csv(c, mesh, dir);
    CHECK(files.size() == 9);
    std::ifstream in(files.front());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("# pzflow", 0) == 0);
  }
}
