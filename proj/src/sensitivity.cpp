#include "pzflow/sensitivity.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>

#include "pzflow/error.hpp"

namespace pzflow {

using nlohmann::json;

ShapeDerivative::ShapeDerivative(const CellForms& forms, const MaterialSet& mat, const VelocityField& V)
    : forms_(forms), mat_(mat), V_(V) {
  check_velocity(forms.mesh, V);
  const CellMesh& mesh = forms.mesh;
  const Index ne = mesh.element_count();
  grad_.resize(ne);
  div_.resize(ne);
  area_.resize(ne);
  double total = 0.0;
  for (Index e = 0; e < ne; ++e) {
    const P1Element el = p1_element(mesh, e);
    grad_[e] = element_gradient(mesh, el, e, V.values);
    div_[e] = grad_[e].trace();
    area_[e] = el.area;
    total += el.area * div_[e];
  }
  mean_div_ = total / forms.measure;
}

namespace {

Mat2 grad_of(const CellMesh& mesh, const Eigen::Matrix<double, 2, 3>& g, Index e, const Points& u) {
  const auto& t = mesh.elements[e];
  Mat23 local;
  for (int a = 0; a < 3; ++a) local.col(a) = u.col(t[a]);
  return local * g.transpose();
}

Vec2 grad_of(const CellMesh& mesh, const Eigen::Matrix<double, 2, 3>& g, Index e, const VecX& phi) {
  const auto& t = mesh.elements[e];
  return g * Vec3(phi[t[0]], phi[t[1]], phi[t[2]]);
}

}  // namespace

double ShapeDerivative::da(const Points& u, const Points& v) const {
  const CellMesh& mesh = forms_.mesh;
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Region r = mesh.regions[e];
    if (!is_solid(r)) continue;
    const P1Element el = p1_element(mesh, e);
    const Mat2 gu = grad_of(mesh, el.grads, e, u), gv = grad_of(mesh, el.grads, e, v);
    const Mat3 C = mat_.elasticity(r);
    const Vec3 su = C * to_voigt_strain(gu), sv = C * to_voigt_strain(gv);
    const Mat2& G = grad_[e];
    s += el.area * (su.dot(to_voigt_strain(gv)) * div_[e] - su.dot(to_voigt_strain(gv * G)) -
                    sv.dot(to_voigt_strain(gu * G)));
  }
  return s / forms_.measure - forms_.a(u, v) * mean_div_;
}

double ShapeDerivative::dd(const VecX& phi, const VecX& psi) const {
  const CellMesh& mesh = forms_.mesh;
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Region r = mesh.regions[e];
    if (!is_matrix(r)) continue;
    const P1Element el = p1_element(mesh, e);
    const Vec2 gp = grad_of(mesh, el.grads, e, phi), gq = grad_of(mesh, el.grads, e, psi);
    const Mat2 d = mat_.permittivity_bar(r);
    const Mat2& G = grad_[e];
    s += el.area * ((d * gp).dot(gq) * div_[e] - (d * gq).dot(G.transpose() * gp) - (d * gp).dot(G.transpose() * gq));
  }
  return s / forms_.measure - forms_.d(phi, psi) * mean_div_;
}

double ShapeDerivative::dg(const Points& u, const VecX& psi) const {
  const CellMesh& mesh = forms_.mesh;
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Region r = mesh.regions[e];
    if (!is_matrix(r)) continue;
    const P1Element el = p1_element(mesh, e);
    const Mat2 gu = grad_of(mesh, el.grads, e, u);
    const Vec2 gq = grad_of(mesh, el.grads, e, psi);
    const Mat23 g = mat_.coupling_bar(r);
    const Mat2& G = grad_[e];
    const Vec2 ge = g * to_voigt_strain(gu);
    s += el.area * (ge.dot(gq) * div_[e] - (g * to_voigt_strain(gu * G)).dot(gq) - ge.dot(G.transpose() * gq));
  }
  return s / forms_.measure - forms_.g(u, psi) * mean_div_;
}

double ShapeDerivative::dflux(const Points& v) const {
  const CellMesh& mesh = forms_.mesh;
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    if (!is_solid(mesh.regions[e])) continue;
    const P1Element el = p1_element(mesh, e);
    const Mat2 gv = grad_of(mesh, el.grads, e, v);
    s -= el.area * (gv.trace() * div_[e] - (gv * grad_[e]).trace());
  }
  return s / forms_.measure - forms_.flux(v) * mean_div_;
}

double ShapeDerivative::dfluid_fraction() const {
  const double dy = dmeasure([](Region) { return true; });
  const double df = dmeasure(is_fluid);
  return (df - forms_.fluid_fraction * dy) / forms_.measure;
}

namespace {

Mat2 from_modes(const Vec3& v) {
  Mat2 m;
  m << v[0], v[2], v[2], v[1];
  return m;
}

double dpermeability(const CellForms& forms, const CorrectorSet& c, const ShapeDerivative& sd, int i, int j,
                     double Kij) {
  const StokesSystem& s = *c.stokes;
  const CellMesh& mesh = forms.mesh;
  const VecX& wi = c.permeability[i].w;
  const VecX& wj = c.permeability[j].w;
  const VecX& pi_i = c.permeability[i].pi;
  const VecX& pi_j = c.permeability[j].pi;
  const auto& rule = triangle_rule(4);
  double total = 0.0;
  for (std::size_t fe = 0; fe < s.fluid_elements.size(); ++fe) {
    const Index e = s.fluid_elements[fe];
    const auto& vd = s.velocity_dofs[fe];
    const auto& pd = s.pressure_dofs[fe];
    const Mat2 J = element_jacobian(mesh, e);
    const double area = 0.5 * J.determinant();
    const Mat2 JinvT = J.inverse().transpose();
    Eigen::Matrix<double, 2, 6> Wi, Wj;
    for (int a = 0; a < 6; ++a) {
      Wi.col(a) = Vec2(wi[2 * vd[a]], wi[2 * vd[a] + 1]);
      Wj.col(a) = Vec2(wj[2 * vd[a]], wj[2 * vd[a] + 1]);
    }
    const Vec3 Pi(pi_i[pd[0]], pi_i[pd[1]], pi_i[pd[2]]);
    const Vec3 Pj(pi_j[pd[0]], pi_j[pd[1]], pi_j[pd[2]]);
    const Mat2& G = sd.grad(e);
    const double divV = G.trace();
    for (const QuadraturePoint& q : rule) {
      Eigen::Matrix<double, 6, 1> N;
      Eigen::Matrix<double, 2, 6> dN;
      p2_shape(q.xi, q.eta, N, dN);
      const Eigen::Matrix<double, 2, 6> grad = JinvT * dN;
      const Vec3 l(1.0 - q.xi - q.eta, q.xi, q.eta);
      const Vec2 vi = Wi * N, vj = Wj * N;
      const Mat2 gi = Wi * grad.transpose(), gj = Wj * grad.transpose();
      const double p_i = l.dot(Pi), p_j = l.dot(Pj);
      const double f_div =
          vj[i] + vi[j] - (gi.array() * gj.array()).sum() + p_i * gj.trace() + p_j * gi.trace();
      const double f_grad = ((gi * G).array() * gj.array()).sum() + ((gj * G).array() * gi.array()).sum() -
                            p_i * (gj * G).trace() - p_j * (gi * G).trace();
      total += q.weight * area * (f_div * divV + f_grad);
    }
  }
  return total / forms.measure - Kij * sd.mean_div();
}

}  // namespace

HomCoeffs sensitivity_of_coefficients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c,
                                      const VelocityField& V) {
  if (!c.complete) throw Error(ErrorCode::IncompleteCorrectors, "corrector set is incomplete");
  const ShapeDerivative sd(forms, mat, V);
  const CellMesh& mesh = forms.mesh;
  HomCoeffs dh;
  dh.compressibility = 0.0;
  dh.scale = mat.scale;
  dh.viscosity_bar = 0.0;
  dh.fluid_fraction = sd.dfluid_fraction();

  std::array<Points, 3> xi, dpi;
  for (int m = 0; m < 3; ++m) {
    xi[m] = c.strain[m].omega + strain_mode(mesh, m);
    dpi[m] = strain_mode_gradient(m) * V.values;
  }
  const std::array<VecX, 3> eta = {c.strain[0].eta, c.strain[1].eta, c.strain[2].eta};

  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n)
      dh.A(n, m) = sd.da(xi[m], xi[n]) - sd.dd(eta[n], eta[m]) + forms.a(xi[m], dpi[n]) + forms.a(dpi[m], xi[n]) -
                   (sd.dg(xi[n], eta[m]) + sd.dg(xi[m], eta[n]) + forms.g(dpi[n], eta[m]) + forms.g(dpi[m], eta[n]));

  const Points& wP = c.pressure.omega;
  const VecX& eP = c.pressure.eta;
  dh.M = mat.compressibility * dh.fluid_fraction - 2.0 * sd.dflux(wP) + sd.dd(eP, eP) + 2.0 * sd.dg(wP, eP) -
         sd.da(wP, wP);

  Vec3 db;
  for (int m = 0; m < 3; ++m)
    db[m] = sd.dflux(c.strain[m].omega) + forms.a(wP, dpi[m]) + sd.da(wP, xi[m]) -
            (sd.dg(wP, eta[m]) + sd.dg(xi[m], eP) + forms.g(dpi[m], eP) + sd.dd(eP, eta[m]));
  dh.B = from_modes(db) + dh.fluid_fraction * Mat2::Identity();

  for (const PiezoPair& el : c.electrode) {
    const Points& wh = el.omega;
    const VecX& ph = el.eta;
    Vec3 dhv;
    for (int m = 0; m < 3; ++m)
      dhv[m] = forms.a(wh, dpi[m]) - forms.g(dpi[m], ph) - sd.dg(wh, eta[m]) - sd.dd(ph, eta[m]) + sd.da(wh, xi[m]) -
               sd.dg(xi[m], ph);
    dh.H.push_back(from_modes(dhv));
    dh.Z.push_back(-sd.dflux(wh) + sd.dg(wP, ph) - sd.da(wh, wP) + sd.dg(wh, eP) + sd.dd(ph, eP));
  }

  if (c.stokes) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double Kij = c.stokes->rhs.col(i).dot(c.permeability[j].w);
        dh.K(i, j) = dpermeability(forms, c, sd, i, j, Kij);
      }
  }
  return dh;
}

VelocityField harmonic_extension(const CellForms& forms, const Points& solid_values, const Mat2& gradient) {
  const CellMesh& mesh = forms.mesh;
  const Index n = mesh.node_count();
  const NodeSets& s = forms.nodes;
  Points periodic = solid_values - gradient * mesh.nodes;
  std::vector<Index> col(forms.pm.count, -1);
  Index ni = 0;
  for (Index v = 0; v < n; ++v) {
    if (s.solid[v]) continue;
    periodic.col(v).setZero();
    const Index m = forms.pm.dof[v];
    if (col[m] < 0) col[m] = ni++;
  }
  VelocityField out;
  if (ni > 0) {
    Triplets tl, tp;
    for (Index e = 0; e < mesh.element_count(); ++e) {
      if (!is_fluid(mesh.regions[e])) continue;
      const P1Element el = p1_element(mesh, e);
      const Mat3 ke = el.area * el.grads.transpose() * el.grads;
      const auto& t = mesh.elements[e];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) tl.emplace_back(t[a], t[b], ke(a, b));
    }
    for (Index v = 0; v < n; ++v)
      if (!s.solid[v]) tp.emplace_back(v, col[forms.pm.dof[v]], 1.0);
    SpMat L(n, n), P(n, ni);
    L.setFromTriplets(tl.begin(), tl.end());
    P.setFromTriplets(tp.begin(), tp.end());
    const SpMat Lii = P.transpose() * L * P;
    Eigen::SimplicialLDLT<SpMat> solver(Lii);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::ExtensionFailure, "fluid Laplacian is singular (fluid component without a wall?)");
    for (int c = 0; c < 2; ++c) {
      const VecX fixed = periodic.row(c).transpose();
      const VecX x = solver.solve(-(P.transpose() * (L * fixed)));
      if (solver.info() != Eigen::Success || !x.allFinite())
        throw Error(ErrorCode::ExtensionFailure, "harmonic extension solve failed");
      periodic.row(c) += (P * x).transpose();
    }
  }
  out.values = periodic + gradient * mesh.nodes;
  out.gradient = gradient;
  return out;
}

VelocityField bubble_extension(const CellForms& forms, const Points& solid_values, const Mat2& gradient, double bump) {
  VelocityField V = harmonic_extension(forms, solid_values, gradient);
  const CellMesh& mesh = forms.mesh;
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index v = 0; v < mesh.node_count(); ++v) {
    if (forms.nodes.solid[v]) continue;
    const Vec2 y = mesh.nodes.col(v);
    V.values.col(v) += bump * Vec2(std::sin(two_pi * y.x()) + 0.5, std::cos(two_pi * y.x()) * std::cos(two_pi * y.y()));
  }
  return V;
}

std::vector<VelocityField> state_velocities(const CellForms& forms, const CorrectorSet& c) {
  std::vector<VelocityField> out;
  for (int m = 0; m < 3; ++m) {
    const Mat2 G = strain_mode_gradient(m);
    out.push_back(harmonic_extension(forms, c.strain[m].omega + G * forms.mesh.nodes, G));
  }
  out.push_back(harmonic_extension(forms, -c.pressure.omega, Mat2::Zero()));
  for (const PiezoPair& e : c.electrode) out.push_back(harmonic_extension(forms, e.omega, Mat2::Zero()));
  return out;
}

CoeffGradients state_gradients(const CellForms& forms, const MaterialSet& mat, const CorrectorSet& c) {
  const std::vector<VelocityField> fields = state_velocities(forms, c);
  CoeffGradients g;
  for (int m = 0; m < 3; ++m) g.strain[m] = sensitivity_of_coefficients(forms, mat, c, fields[m]);
  g.pressure = sensitivity_of_coefficients(forms, mat, c, fields[3]);
  for (std::size_t a = 0; a < c.electrode.size(); ++a)
    g.potential.push_back(sensitivity_of_coefficients(forms, mat, c, fields[4 + a]));
  return g;
}

namespace {

void add_scaled(HomCoeffs& x, const HomCoeffs& d, double s) {
  x.A += s * d.A;
  x.B += s * d.B;
  x.M += s * d.M;
  for (std::size_t a = 0; a < x.H.size() && a < d.H.size(); ++a) x.H[a] += s * d.H[a];
  for (std::size_t a = 0; a < x.Z.size() && a < d.Z.size(); ++a) x.Z[a] += s * d.Z[a];
  x.K += s * d.K;
  x.fluid_fraction += s * d.fluid_fraction;
}

void scale_coeffs(HomCoeffs& x, double s) {
  x.A *= s;
  x.B *= s;
  x.M *= s;
  for (Mat2& h : x.H) h *= s;
  for (double& z : x.Z) z *= s;
  x.K *= s;
  x.fluid_fraction *= s;
}

}  // namespace

HomCoeffs expand_coefficients(const HomCoeffs& x0, const CoeffGradients& g, const Mat2& e, double p,
                              const std::vector<double>& phi) {
  HomCoeffs x = x0;
  const Vec3 ev(e(0, 0), e(1, 1), e(0, 1) + e(1, 0));
  for (int m = 0; m < 3; ++m) add_scaled(x, g.strain[m], ev[m]);
  add_scaled(x, g.pressure, p);
  for (std::size_t a = 0; a < phi.size() && a < g.potential.size(); ++a) add_scaled(x, g.potential[a], phi[a]);
  return x;
}

CoeffVector flatten_sensitivities(const HomCoeffs& h) {
  CoeffVector v;
  std::vector<double> vals;
  const char* modes[3] = {"11", "22", "12"};
  auto push = [&](const std::string& fam, const std::string& name, double x) {
    v.family.push_back(fam);
    v.names.push_back(name);
    vals.push_back(x);
  };
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) push("A", std::string("A_") + modes[m] + "_" + modes[n], h.A(m, n));
  const int I[3] = {0, 1, 0}, J[3] = {0, 1, 1};
  for (int m = 0; m < 3; ++m) push("B", std::string("B_") + modes[m], h.B(I[m], J[m]));
  push("M", "M", h.M);
  for (std::size_t a = 0; a < h.H.size(); ++a)
    for (int m = 0; m < 3; ++m)
      push("H" + std::to_string(a + 1), "H" + std::to_string(a + 1) + "_" + modes[m], h.H[a](I[m], J[m]));
  for (std::size_t a = 0; a < h.Z.size(); ++a) push("Z" + std::to_string(a + 1), "Z" + std::to_string(a + 1), h.Z[a]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) push("K", "K_" + std::to_string(i + 1) + std::to_string(j + 1), h.K(i, j));
  v.values = Eigen::Map<VecX>(vals.data(), Index(vals.size()));
  return v;
}

json to_json(const CoeffGradients& g) {
  json j;
  json strain = json::array();
  for (const HomCoeffs& s : g.strain) strain.push_back(to_json(s));
  j["strain"] = strain;
  j["pressure"] = to_json(g.pressure);
  j["potential"] = json::array();
  for (const HomCoeffs& p : g.potential) j["potential"].push_back(to_json(p));
  j["strain_contraction"] = "engineering strain (e11, e22, 2 e12)";
  return j;
}

CoeffGradients gradients_from_json(const json& j) {
  CoeffGradients g;
  try {
    for (int m = 0; m < 3; ++m) g.strain[m] = coeffs_from_json(j.at("strain").at(m));
    g.pressure = coeffs_from_json(j.at("pressure"));
    for (const json& p : j.at("potential")) g.potential.push_back(coeffs_from_json(p));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed gradient report: ") + ex.what());
  }
  return g;
}

HomCoeffs homogenize(const CellMesh& mesh, const MaterialSet& mat) {
  const CellForms forms = assemble_cell_forms(mesh, mat);
  const CorrectorSet c = solve_all_correctors(forms, mesh, mat);
  return compute_coefficients(forms, mat, c);
}

FiniteDifferenceOracle::FiniteDifferenceOracle(const CellMesh& mesh, const MaterialSet& mat, int budget)
    : mesh_(mesh), mat_(mat), budget_(budget) {}

HomCoeffs FiniteDifferenceOracle::at(const VelocityField& V, double tau) {
  if (++solves_ > budget_)
    throw Error(ErrorCode::OracleBudgetExceeded, "finite-difference oracle exceeded " + std::to_string(budget_) +
                                                     " cell re-solves");
  return homogenize(tau == 0.0 ? mesh_ : perturb_mesh(mesh_, V, tau), mat_);
}

HomCoeffs FiniteDifferenceOracle::central(const VelocityField& V, double tau) {
  const HomCoeffs plus = at(V, tau), minus = at(V, -tau);
  HomCoeffs d = plus;
  add_scaled(d, minus, -1.0);
  scale_coeffs(d, 1.0 / (2.0 * tau));
  return d;
}

VelocityField random_periodic_velocity(const CellMesh& mesh, unsigned seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  struct Term {
    int k1, k2;
    Vec2 a, b;
  };
  std::vector<Term> terms;
  for (int k1 = 0; k1 <= modes; ++k1)
    for (int k2 = -modes; k2 <= modes; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double damp = 1.0 / (1.0 + k1 * k1 + k2 * k2);
      terms.push_back({k1, k2, damp * Vec2(coef(rng), coef(rng)), damp * Vec2(coef(rng), coef(rng))});
    }
  VelocityField V;
  V.values = Points::Zero(2, mesh.node_count());
  for (Index v = 0; v < mesh.node_count(); ++v) {
    const Vec2 y = mesh.nodes.col(v);
    for (const Term& t : terms) {
      const double arg = two_pi * (t.k1 * y.x() + t.k2 * y.y());
      V.values.col(v) += t.a * std::sin(arg) + t.b * std::cos(arg);
    }
  }
  // Exact periodicity: copy master values onto slaves.
  for (const auto& [m, s] : mesh.periodic_pairs) V.values.col(s) = V.values.col(m);
  V.values /= V.values.colwise().norm().maxCoeff();
  return V;
}

namespace {

double log_slope(const std::array<double, 3>& x, const std::array<double, 3>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < 3; ++k) {
    const double lx = std::log10(x[k]), ly = std::log10(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
}

}  // namespace

AuditResult run_sensitivity_audit(const CellMesh& mesh, const MaterialSet& mat, const AuditConfig& cfg) {
  const CellForms forms = assemble_cell_forms(mesh, mat);
  const CorrectorSet c = solve_all_correctors(forms, mesh, mat);
  const HomCoeffs base = compute_coefficients(forms, mat, c);

  std::vector<std::pair<std::string, VelocityField>> fields;
  for (int k = 0; k < cfg.random_fields; ++k)
    fields.emplace_back("random_" + std::to_string(k + 1), random_periodic_velocity(mesh, cfg.seed + 101 * k));
  const std::vector<VelocityField> states = state_velocities(forms, c);
  const char* names[3] = {"Xi_11", "Xi_22", "Xi_12"};
  for (int m = 0; m < 3; ++m) fields.emplace_back(names[m], states[m]);
  fields.emplace_back("minus_omega_P", states[3]);
  for (std::size_t a = 0; a < c.electrode.size(); ++a)
    fields.emplace_back("omega_hat_" + std::to_string(a + 1), states[4 + a]);

  FiniteDifferenceOracle oracle(mesh, mat, cfg.budget);
  AuditResult result;
  result.min_slope = std::numeric_limits<double>::infinity();
  const CoeffVector x0 = flatten_sensitivities(base);
  for (auto& [name, V] : fields) {
    // Directions are normalized to unit nodal magnitude; sensitivities are linear in V.
    const double vmax = V.values.colwise().norm().maxCoeff();
    V.values /= vmax;
    V.gradient /= vmax;
    const CoeffVector f = flatten_sensitivities(sensitivity_of_coefficients(forms, mat, c, V));
    const CoeffVector d = flatten_sensitivities(oracle.central(V, cfg.tau));
    std::map<std::string, double> family_scale;
    for (Index i = 0; i < d.values.size(); ++i)
      family_scale[d.family[i]] = std::max(family_scale[d.family[i]], std::abs(d.values[i]));
    for (Index i = 0; i < d.values.size(); ++i) {
      const double scale = std::max(family_scale[d.family[i]], 1e-300);
      AuditRow row{name, f.names[i], f.family[i], f.values[i], d.values[i], std::abs(f.values[i] - d.values[i]) / scale};
      result.max_rel_error = std::max(result.max_rel_error, row.rel_error);
      result.rows.push_back(row);
    }
    if (!cfg.sweep) continue;
    std::map<std::string, std::array<double, 3>> rem;
    std::map<std::string, double> x0_norm;
    for (Index i = 0; i < x0.values.size(); ++i) x0_norm[x0.family[i]] += x0.values[i] * x0.values[i];
    for (int k = 0; k < 3; ++k) {
      const double tau = cfg.sweep_taus[k];
      const CoeffVector xt = flatten_sensitivities(oracle.at(V, tau));
      for (Index i = 0; i < xt.values.size(); ++i) {
        const double r = xt.values[i] - x0.values[i] - tau * f.values[i];
        rem[xt.family[i]][k] += r * r;
      }
    }
    std::array<double, 3> combined{};
    for (auto& [fam, r] : rem)
      for (int k = 0; k < 3; ++k) {
        if (x0_norm[fam] > 0.0) combined[k] += r[k] / x0_norm[fam];
        r[k] = std::sqrt(r[k]);
      }
    for (double& c2 : combined) c2 = std::sqrt(c2);
    rem["all"] = combined;
    for (auto& [fam, r] : rem) {
      SweepRow row{name, fam, r, log_slope(cfg.sweep_taus, r)};
      if (fam == "all") result.min_slope = std::min(result.min_slope, row.slope);
      result.sweep.push_back(row);
    }
  }
  result.solves = oracle.solves();
  return result;
}

void write_audit_csv(const AuditResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << std::setprecision(12) << "# pzflow sensitivity audit v1; rel_error = |formula - fd| / max |fd| over the coefficient family\n"
         "field,coefficient,formula_value,fd_value,rel_error\n";
  for (const AuditRow& row : r.rows)
    out << row.field << ',' << row.coefficient << ',' << row.formula << ',' << row.fd << ',' << row.rel_error << '\n';
}

void write_sweep_csv(const AuditResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << std::setprecision(12) << "# pzflow tau sweep v1; family all = family-normalized remainder of the full coefficient set\n"
         "field,family,r_1e-3,r_1e-4,r_1e-5,slope\n";
  for (const SweepRow& row : r.sweep)
    out << row.field << ',' << row.family << ',' << row.remainder[0] << ',' << row.remainder[1] << ','
        << row.remainder[2] << ',' << row.slope << '\n';
}

}  // namespace pzflow
