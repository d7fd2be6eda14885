#include "doctest.h"
#include "pzflow/error.hpp"
#include "pzflow/sensitivity.hpp"

using namespace pzflow;

namespace {

MaterialSet base_materials() { return load_materials(std::string(PZFLOW_DATA_DIR) + "/materials.json"); }

struct Cell {
  CellMesh mesh;
  CellForms forms;
  CorrectorSet c;
  HomCoeffs h;

  Cell(CellMesh m, const MaterialSet& mat)
      : mesh(std::move(m)), forms(assemble_cell_forms(mesh, mat)), c(solve_all_correctors(forms, mesh, mat)),
        h(compute_coefficients(forms, mat, c)) {}
};

VelocityField constant_field(const CellMesh& mesh, Vec2 v) {
  VelocityField V;
  V.values = v.replicate(1, mesh.node_count());
  return V;
}

}  // namespace

TEST_SUITE("sensitivity") {
  TEST_CASE("zero and translation velocities") {
    const MaterialSet mat = base_materials();
    const Cell cell(generate_canonical_cell(16), mat);
    const CoeffVector zero =
        flatten_sensitivities(sensitivity_of_coefficients(cell.forms, mat, cell.c, constant_field(cell.mesh, {0, 0})));
    CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

    const ShapeDerivative sd(cell.forms, mat, constant_field(cell.mesh, {0.3, -0.7}));
    CHECK(std::abs(sd.da(cell.c.strain[0].omega, cell.c.strain[1].omega)) == 0.0);
    CHECK(sd.mean_div() == 0.0);

    const CoeffVector shift =
        flatten_sensitivities(sensitivity_of_coefficients(cell.forms, mat, cell.c, constant_field(cell.mesh, {0.3, -0.7})));
    const CoeffVector x0 = flatten_sensitivities(cell.h);
    for (Index i = 0; i < shift.values.size(); ++i) CHECK(std::abs(shift.values[i]) <= 1e-10 * x0.values.cwiseAbs().maxCoeff());
  }

  TEST_CASE("measure derivative: volume and surface forms agree") {
    const MaterialSet mat = base_materials();
    const Cell cell(generate_canonical_cell(16), mat);
    VelocityField radial;
    radial.values = cell.mesh.nodes.colwise() - Vec2(0.5, 0.28);
    radial.gradient = Mat2::Identity();
    const ShapeDerivative sd(cell.forms, mat, radial);
    const auto electrode = [](Region r) { return r == conductor(1); };
    const double vol = sd.dmeasure(electrode);
    CHECK(vol == doctest::Approx(2.0 * region_measure(cell.mesh, electrode)).epsilon(1e-12));
    CHECK(std::abs(vol - sd.dmeasure_surface(electrode)) < 1e-10);

    const VelocityField V = random_periodic_velocity(cell.mesh, 3);
    const ShapeDerivative sp(cell.forms, mat, V);
    CHECK(std::abs(sp.dmeasure(is_fluid) - sp.dmeasure_surface(is_fluid)) < 1e-10);
    CHECK(std::abs(sp.dmeasure([](Region) { return true; })) < 1e-12);
  }

  TEST_CASE("dK is independent of the fluid extension") {
    const MaterialSet mat = base_materials();
    const Cell cell(generate_canonical_cell(16), mat);
    const VelocityField V = random_periodic_velocity(cell.mesh, 9);
    const Mat2 a = sensitivity_of_coefficients(cell.forms, mat, cell.c, harmonic_extension(cell.forms, V.values, V.gradient)).K;
    const Mat2 b =
        sensitivity_of_coefficients(cell.forms, mat, cell.c, bubble_extension(cell.forms, V.values, V.gradient, 0.5)).K;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10 * a.cwiseAbs().maxCoeff());
  }

  TEST_CASE("uncoupled cell has no potential gradients") {
    MaterialSet mat = base_materials();
    for (auto& [name, r] : mat.regions) r.coupling.setZero();
    const Cell cell(generate_canonical_cell(16), mat);
    const CoeffGradients g = state_gradients(cell.forms, mat, cell.c);
    REQUIRE(g.potential.size() == 2);
    for (const HomCoeffs& d : g.potential) CHECK(flatten_sensitivities(d).values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("strain gradient scales with the stiffness") {
    MaterialSet mat = base_materials();
    for (auto& [name, r] : mat.regions) r.coupling.setZero();
    const Cell one(generate_canonical_cell(16), mat);
    const CoeffGradients g1 = state_gradients(one.forms, mat, one.c);
    for (auto& [name, r] : mat.regions) r.elasticity *= 2.0;
    const Cell two(generate_canonical_cell(16), mat);
    const CoeffGradients g2 = state_gradients(two.forms, mat, two.c);
    for (int m = 0; m < 3; ++m)
      CHECK((g2.strain[m].A - 2.0 * g1.strain[m].A).cwiseAbs().maxCoeff() <
            1e-9 * g1.strain[m].A.cwiseAbs().maxCoeff());
  }

  TEST_CASE("first-order expansion") {
    const MaterialSet mat = base_materials();
    const Cell cell(generate_canonical_cell(16), mat);
    const CoeffGradients g = state_gradients(cell.forms, mat, cell.c);
    const VecX x0 = flatten_sensitivities(cell.h).values;
    CHECK(flatten_sensitivities(expand_coefficients(cell.h, g, Mat2::Zero(), 0.0, {0.0, 0.0})).values == x0);
    Mat2 e;
    e << 1e-3, 2e-4, 2e-4, -5e-4;
    const VecX d1 = flatten_sensitivities(expand_coefficients(cell.h, g, e, 10.0, {0.0, 3.0})).values - x0;
    const VecX d2 = flatten_sensitivities(expand_coefficients(cell.h, g, 2.0 * e, 20.0, {0.0, 6.0})).values - x0;
    CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() < 1e-12 * x0.cwiseAbs().maxCoeff());

    const CoeffGradients back = gradients_from_json(to_json(g));
    for (int m = 0; m < 3; ++m) CHECK(flatten_sensitivities(back.strain[m]).values == flatten_sensitivities(g.strain[m]).values);
    CHECK(flatten_sensitivities(back.pressure).values == flatten_sensitivities(g.pressure).values);
  }

  TEST_CASE("formulas match the mesh-perturbation oracle") {
    AuditConfig cfg;
    cfg.random_fields = 1;
    cfg.sweep = false;
    // At resolution 16 the electrodes are one element thick and the tau = 1e-5
    // difference is not yet in its asymptotic range for Z along omega-hat.
    const AuditResult r = run_sensitivity_audit(generate_canonical_cell(32), base_materials(), cfg);
    CHECK(r.rows.size() == 7 * 25);
    CHECK(r.max_rel_error < 1e-3);
    CHECK(r.solves == 14);
    for (const AuditRow& row : r.rows)
      if (row.field == "minus_omega_P" && row.coefficient == "K_11") CHECK(row.formula * row.fd > 0.0);
  }

  TEST_CASE("oracle budget") {
    AuditConfig cfg;
    cfg.random_fields = 2;
    cfg.sweep = false;
    cfg.budget = 3;
    bool threw = false;
    try {
      run_sensitivity_audit(generate_canonical_cell(16), base_materials(), cfg);
    } catch (const Error& e) {
      threw = e.code() == ErrorCode::OracleBudgetExceeded;
    }
    CHECK(threw);
  }

  TEST_CASE("random velocities are periodic and deterministic") {
    const CellMesh mesh = generate_canonical_cell(16);
    const VelocityField a = random_periodic_velocity(mesh, 4), b = random_periodic_velocity(mesh, 4);
    CHECK(a.values == b.values);
    CHECK_NOTHROW(check_velocity(mesh, a));
    CHECK(a.values.colwise().norm().maxCoeff() == doctest::Approx(1.0));
  }
}
