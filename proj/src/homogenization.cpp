#include "pzflow/homogenization.hpp"

#include <cmath>

#include "pzflow/error.hpp"

namespace pzflow {

using nlohmann::json;

namespace {

Mat2 from_modes(const Vec3& v) {
  Mat2 m;
  m << v[0], v[2], v[2], v[1];
  return m;
}

Vec3 to_modes(const Mat2& m) { return {m(0, 0), m(1, 1), m(0, 1)}; }

}  // namespace

HomCoeffs compute_coefficients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c) {
  if (!c.complete || int(c.electrode.size()) != forms.mesh.electrode_count())
    throw Error(ErrorCode::IncompleteCorrectors, "corrector set is incomplete");
  if (forms.fluid_fraction > 0.0 && (!c.stokes || c.permeability.size() != 2))
    throw Error(ErrorCode::IncompleteCorrectors, "permeability correctors missing");
  const CellMesh& mesh = forms.mesh;
  HomCoeffs h;
  h.fluid_fraction = forms.fluid_fraction;
  h.compressibility = mat.compressibility;
  h.scale = mat.scale;
  h.viscosity_bar = mat.viscosity_bar();

  std::array<Points, 3> xi;
  for (int m = 0; m < 3; ++m) xi[m] = c.strain[m].omega + strain_mode(mesh, m);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n)
      h.A(n, m) = forms.a(xi[m], xi[n]) + forms.d(c.strain[n].eta, c.strain[m].eta);

  Vec3 b, s;
  for (int m = 0; m < 3; ++m) {
    const Points pi = strain_mode(mesh, m);
    b[m] = forms.a(c.pressure.omega, pi) - forms.g(pi, c.pressure.eta);
    s[m] = forms.a(c.charge.omega, pi) - forms.g(pi, c.charge.eta);
  }
  h.B = from_modes(b) + h.fluid_fraction * Mat2::Identity();
  h.S = from_modes(s);
  Vec3 b_alt;
  for (int m = 0; m < 3; ++m) b_alt[m] = forms.flux(c.strain[m].omega);
  h.B_identity_gap = (h.B - from_modes(b_alt) - h.fluid_fraction * Mat2::Identity()).cwiseAbs().maxCoeff();

  h.M = forms.a(c.pressure.omega, c.pressure.omega) + forms.d(c.pressure.eta, c.pressure.eta) +
        h.fluid_fraction * h.compressibility;
  h.R = -forms.flux(c.charge.omega);
  for (const PiezoPair& e : c.electrode) {
    Vec3 hv;
    for (int m = 0; m < 3; ++m) {
      const Points pi = strain_mode(mesh, m);
      hv[m] = forms.a(e.omega, pi) - forms.g(pi, e.eta);
    }
    h.H.push_back(from_modes(hv));
    h.Z.push_back(-forms.flux(e.omega));
  }
  if (c.stokes)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) h.K(i, j) = c.stokes->rhs.col(i).dot(c.permeability[j].w);
  return h;
}

Eigen::Matrix<double, 4, 4> full_elasticity_tensor(const CellForms& forms) {
  const PiezoSolver solver(forms);
  const CellMesh& mesh = forms.mesh;
  std::array<Points, 4> xi;
  std::array<VecX, 4> eta;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 grad = Mat2::Zero();
      grad(i, j) = 1.0;
      const Points pi = grad * mesh.nodes;
      const PiezoPair p = solver.solve(-(forms.A * flat(pi)), -(forms.G * flat(pi)));
      xi[2 * i + j] = p.omega + pi;
      eta[2 * i + j] = p.eta;
    }
  Eigen::Matrix<double, 4, 4> A;
  for (int ij = 0; ij < 4; ++ij)
    for (int kl = 0; kl < 4; ++kl) A(kl, ij) = forms.a(xi[ij], xi[kl]) + forms.d(eta[kl], eta[ij]);
  return A;
}

double symmetry_defect(const HomCoeffs& h) {
  auto rel = [](const auto& m) {
    const double n = m.norm();
    return n > 0.0 ? (m - m.transpose()).cwiseAbs().maxCoeff() / n : 0.0;
  };
  double d = std::max({rel(h.A), rel(h.B), rel(h.S), rel(h.K)});
  for (const Mat2& H : h.H) d = std::max(d, rel(H));
  return d;
}

json to_json(const HomCoeffs& h) {
  auto mat = [](const auto& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  auto voigt = [](const Mat2& m) {
    const Vec3 v = to_modes(m);
    return json::array({v[0], v[1], v[2]});
  };
  json j;
  j["voigt_order"] = json::array({"11", "22", "12"});
  j["A"] = mat(h.A);
  j["B"] = voigt(h.B);
  j["M"] = h.M;
  j["H"] = json::array();
  for (const Mat2& H : h.H) j["H"].push_back(voigt(H));
  j["S"] = voigt(h.S);
  j["R"] = h.R;
  j["Z"] = h.Z;
  j["K"] = mat(h.K);
  j["K_unit"] = "cell";
  j["fluid_fraction"] = h.fluid_fraction;
  j["compressibility"] = h.compressibility;
  j["eps0"] = h.scale;
  j["viscosity_bar"] = h.viscosity_bar;
  j["B_identity_gap"] = h.B_identity_gap;
  return j;
}

HomCoeffs coeffs_from_json(const json& j) {
  auto voigt = [](const json& a) { return from_modes(Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>())); };
  HomCoeffs h;
  try {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) h.A(r, c) = j.at("A")[r][c].get<double>();
    h.B = voigt(j.at("B"));
    h.M = j.at("M").get<double>();
    for (const json& H : j.at("H")) h.H.push_back(voigt(H));
    h.S = voigt(j.at("S"));
    h.R = j.at("R").get<double>();
    h.Z = j.at("Z").get<std::vector<double>>();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) h.K(r, c) = j.at("K")[r][c].get<double>();
    h.fluid_fraction = j.at("fluid_fraction").get<double>();
    h.compressibility = j.at("compressibility").get<double>();
    h.scale = j.at("eps0").get<double>();
    h.viscosity_bar = j.at("viscosity_bar").get<double>();
    h.B_identity_gap = j.value("B_identity_gap", 0.0);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed coefficient report: ") + ex.what());
  }
  return h;
}

MicroDisplacement reconstruct_micro_displacement(const CorrectorSet& c, const CellMesh& mesh, const Mat2& e,
                                                 double p, const std::vector<double>& phi, double rho) {
  if (phi.size() > c.electrode.size())
    throw Error(ErrorCode::ConfigError, "more potentials than electrode correctors");
  MicroDisplacement out;
  const Vec3 ev(e(0, 0), e(1, 1), e(0, 1) + e(1, 0));
  out.fluctuation = Points::Zero(2, mesh.node_count());
  for (int m = 0; m < 3; ++m) out.fluctuation += ev[m] * c.strain[m].omega;
  out.fluctuation += -p * c.pressure.omega + rho * c.charge.omega;
  for (std::size_t a = 0; a < phi.size(); ++a) out.fluctuation += phi[a] * c.electrode[a].omega;
  out.total = sym(e) * mesh.nodes + out.fluctuation;
  return out;
}

}  // namespace pzflow
