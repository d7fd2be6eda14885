#include "pzflow/cell_problems.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "pzflow/error.hpp"

namespace pzflow {

namespace {

SpMat block_system(const std::vector<std::pair<std::array<Index, 2>, SpMat>>& blocks, Index n) {
  Triplets t;
  for (const auto& [offset, m] : blocks)
    for (Index k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) t.emplace_back(offset[0] + it.row(), offset[1] + it.col(), it.value());
  SpMat out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

}  // namespace

PiezoSolver::PiezoSolver(const CellForms& forms) : forms_(forms) {
  const Index n = forms.mesh.node_count();
  const NodeSets& s = forms.nodes;
  std::vector<Index> ucol(forms.pm.count, -1), ecol(forms.pm.count, -1);
  Index nu = 0, ne = 0;
  for (Index v = 0; v < n; ++v) {
    const Index m = forms.pm.dof[v];
    if (s.solid[v] && ucol[m] < 0) ucol[m] = nu++;
    if (s.matrix[v] && s.conductor[v] == 0 && ecol[m] < 0) ecol[m] = ne++;
  }
  Triplets tu, te;
  for (Index v = 0; v < n; ++v) {
    const Index m = forms.pm.dof[v];
    if (ucol[m] >= 0)
      for (int c = 0; c < 2; ++c) tu.emplace_back(2 * v + c, 2 * ucol[m] + c, 1.0);
    if (ecol[m] >= 0) te.emplace_back(v, ecol[m], 1.0);
  }
  Pu_.resize(2 * n, 2 * nu);
  Pu_.setFromTriplets(tu.begin(), tu.end());
  Peta_.resize(n, ne);
  Peta_.setFromTriplets(te.begin(), te.end());

  const SpMat Auu = Pu_.transpose() * forms.A * Pu_;
  const SpMat Geu = Peta_.transpose() * forms.G * Pu_;
  const SpMat Dee = Peta_.transpose() * forms.D * Peta_;

  // Rigid translations; constant potentials when no electrode pins them.
  const bool pin_eta = forms.mesh.electrode_count() == 0 && ne > 0;
  constraints_ = 2 + (pin_eta ? 1 : 0);
  Triplets tc;
  for (Index v = 0; v < n; ++v) {
    const Index m = forms.pm.dof[v];
    if (ucol[m] >= 0)
      for (int c = 0; c < 2; ++c) tc.emplace_back(c, 2 * ucol[m] + c, forms.solid_weights[v]);
    if (pin_eta && ecol[m] >= 0) tc.emplace_back(2, 2 * nu + ecol[m], forms.matrix_weights[v]);
  }
  const Index nsys = 2 * nu + ne + constraints_;
  SpMat C(constraints_, 2 * nu + ne);
  C.setFromTriplets(tc.begin(), tc.end());
  const SpMat Ct = C.transpose();
  const SpMat Gt = -SpMat(Geu.transpose());
  const SpMat Gn = -Geu;
  const SpMat Dn = -Dee;
  K_ = block_system({{{0, 0}, Auu},
                     {{0, 2 * nu}, Gt},
                     {{2 * nu, 0}, Gn},
                     {{2 * nu, 2 * nu}, Dn},
                     {{2 * nu + ne, 0}, C},
                     {{0, 2 * nu + ne}, Ct}},
                    nsys);
  scaling_ = VecX::Ones(nsys);
  for (Index i = 0; i < 2 * nu + ne; ++i) {
    const double dii = std::abs(K_.coeff(i, i));
    if (dii > 0.0) scaling_[i] = 1.0 / std::sqrt(dii);
  }
  const SpMat scaled = scaling_.asDiagonal() * K_ * scaling_.asDiagonal();
  lu_.compute(scaled);
  if (lu_.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "piezo corrector system is singular: " + lu_.lastErrorMessage());
}

PiezoPair PiezoSolver::solve(const VecX& load_u, const VecX& load_psi) const {
  const Index nu = Pu_.cols(), ne = Peta_.cols();
  VecX rhs = VecX::Zero(nu + ne + constraints_);
  rhs.head(nu) = Pu_.transpose() * load_u;
  rhs.segment(nu, ne) = -(Peta_.transpose() * load_psi);
  // Equilibrated solve with two steps of iterative refinement.
  VecX x = scaling_.cwiseProduct(lu_.solve(scaling_.cwiseProduct(rhs)));
  for (int it = 0; it < 2; ++it) {
    const VecX r = rhs - K_ * x;
    x += scaling_.cwiseProduct(lu_.solve(scaling_.cwiseProduct(r)));
  }
  if (lu_.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::SolverFailure, "piezo corrector solve failed");
  PiezoPair out;
  out.omega.resize(2, forms_.mesh.node_count());
  flat(out.omega) = Pu_ * x.head(nu);
  out.eta = Peta_ * x.segment(nu, ne);
  return out;
}

double PiezoSolver::residual(const PiezoPair& s, const VecX& load_u, const VecX& load_psi, const VecX& lift) const {
  const VecX eta = s.eta - lift;
  const VecX ru = Pu_.transpose() * (forms_.A * flat(s.omega) - forms_.G.transpose() * eta - load_u);
  const VecX re = Peta_.transpose() * (forms_.G * flat(s.omega) + forms_.D * eta - load_psi);
  const double scale = std::max({(Pu_.transpose() * load_u).norm(), (Peta_.transpose() * load_psi).norm(),
                                 (Pu_.transpose() * forms_.A * flat(s.omega)).norm(), 1e-300});
  return std::sqrt(ru.squaredNorm() + re.squaredNorm()) / scale;
}

PiezoPair solve_strain_corrector(const PiezoSolver& solver, const CellForms& forms, int voigt) {
  const Points pi = strain_mode(forms.mesh, voigt);
  return solver.solve(-(forms.A * flat(pi)), -(forms.G * flat(pi)));
}

PiezoPair solve_pressure_corrector(const PiezoSolver& solver, const CellForms& forms, const LoadFunctional& flux) {
  return solver.solve(-flux.coefficients, VecX::Zero(forms.mesh.node_count()));
}

PiezoPair solve_charge_corrector(const PiezoSolver& solver, const CellForms& forms) {
  return solver.solve(VecX::Zero(2 * forms.mesh.node_count()), forms.charge_load);
}

VecX electrode_lifting(const CellForms& forms, int alpha) {
  VecX lift = VecX::Zero(forms.mesh.node_count());
  for (Index v = 0; v < lift.size(); ++v)
    if (forms.nodes.conductor[v] == alpha) lift[v] = 1.0;
  return lift;
}

PiezoPair solve_electrode_corrector(const PiezoSolver& solver, const CellForms& forms, int alpha) {
  const VecX lift = electrode_lifting(forms, alpha);
  PiezoPair out = solver.solve(forms.G.transpose() * lift, -(forms.D * lift));
  out.eta += lift;
  return out;
}

std::vector<FlowPair> solve_permeability_correctors(const StokesSystem& s) {
  std::vector<Index> vcol(s.velocity_nodes, -1), pcol(s.pressure_nodes, -1);
  Index nv = 0, np = 0;
  for (Index i = 0; i < s.velocity_nodes; ++i)
    if (s.velocity_active[i]) vcol[i] = nv++;
  for (Index i = 0; i < s.pressure_nodes; ++i)
    if (s.pressure_active[i]) pcol[i] = np++;
  Triplets tv, tp;
  for (Index i = 0; i < s.velocity_nodes; ++i)
    if (vcol[i] >= 0)
      for (int c = 0; c < 2; ++c) tv.emplace_back(2 * i + c, 2 * vcol[i] + c, 1.0);
  for (Index i = 0; i < s.pressure_nodes; ++i)
    if (pcol[i] >= 0) tp.emplace_back(i, pcol[i], 1.0);
  SpMat Pv(2 * s.velocity_nodes, 2 * nv), Pp(s.pressure_nodes, np);
  Pv.setFromTriplets(tv.begin(), tv.end());
  Pp.setFromTriplets(tp.begin(), tp.end());

  const SpMat V = Pv.transpose() * s.viscous * Pv;
  const SpMat B = Pp.transpose() * s.divergence * Pv;
  Triplets tc;
  for (Index i = 0; i < s.pressure_nodes; ++i)
    if (pcol[i] >= 0) tc.emplace_back(s.pressure_component[i], pcol[i], s.pressure_weights[i]);
  SpMat C(s.components, np);
  C.setFromTriplets(tc.begin(), tc.end());
  const Index n = 2 * nv + np + s.components;
  const SpMat Bt = -SpMat(B.transpose());
  const SpMat Bn = -B;
  const SpMat Ct = C.transpose();
  SpMat K = block_system({{{0, 0}, V}, {{0, 2 * nv}, Bt}, {{2 * nv, 0}, Bn}, {{2 * nv, 2 * nv + np}, Ct},
                          {{2 * nv + np, 2 * nv}, C}},
                         n);
  Eigen::SparseLU<SpMat> lu(K);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::InfSupFailure, "Stokes saddle-point system is singular: " + lu.lastErrorMessage());
  std::vector<FlowPair> out;
  for (int k = 0; k < 2; ++k) {
    VecX rhs = VecX::Zero(n);
    rhs.head(2 * nv) = Pv.transpose() * s.rhs.col(k);
    const VecX x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
      throw Error(ErrorCode::SolverFailure, "Stokes corrector solve failed");
    out.push_back({Pv * x.head(2 * nv), Pp * x.segment(2 * nv, np)});
  }
  return out;
}

CorrectorSet solve_all_correctors(const CellForms& forms, const CellMesh& mesh, const MaterialSet& mat) {
  CorrectorSet c;
  const PiezoSolver solver(forms);
  const Index n = mesh.node_count();
  const VecX none = VecX::Zero(n);
  auto track = [&](const PiezoPair& s, const VecX& lu, const VecX& lp, const VecX& lift) {
    c.max_residual = std::max(c.max_residual, solver.residual(s, lu, lp, lift));
  };
  for (int m = 0; m < 3; ++m) {
    c.strain[m] = solve_strain_corrector(solver, forms, m);
    const Points pi = strain_mode(mesh, m);
    track(c.strain[m], -(forms.A * flat(pi)), -(forms.G * flat(pi)), none);
  }
  c.pressure = solve_pressure_corrector(solver, forms, forms.flux);
  track(c.pressure, -forms.flux.coefficients, none, none);
  c.charge = solve_charge_corrector(solver, forms);
  track(c.charge, VecX::Zero(2 * n), forms.charge_load, none);
  for (int a = 1; a <= mesh.electrode_count(); ++a) {
    c.electrode.push_back(solve_electrode_corrector(solver, forms, a));
    const VecX lift = electrode_lifting(forms, a);
    track(c.electrode.back(), forms.G.transpose() * lift, -(forms.D * lift), lift);
  }
  if (forms.fluid_fraction > 0.0) {
    auto stokes = std::make_shared<StokesSystem>(assemble_stokes_system(mesh, mat));
    c.permeability = solve_permeability_correctors(*stokes);
    c.stokes = std::move(stokes);
  }
  c.complete = true;
  return c;
}

namespace {

void write_piezo_csv(const std::string& path, const CellMesh& mesh, const PiezoPair& p, const char* scalar) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << std::setprecision(17);
  out << "# pzflow corrector field v1\nnode,x,y,omega_1,omega_2," << scalar << '\n';
  for (Index v = 0; v < mesh.node_count(); ++v)
    out << v << ',' << mesh.nodes(0, v) << ',' << mesh.nodes(1, v) << ',' << p.omega(0, v) << ',' << p.omega(1, v)
        << ',' << p.eta[v] << '\n';
}

}  // namespace

std::vector<std::string> export_correctors_csv(const CorrectorSet& c, const CellMesh& mesh, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  const char* modes[3] = {"11", "22", "12"};
  for (int m = 0; m < 3; ++m) {
    files.push_back((fs::path(dir) / ("corrector_strain_" + std::string(modes[m]) + ".csv")).string());
    write_piezo_csv(files.back(), mesh, c.strain[m], "eta");
  }
  files.push_back((fs::path(dir) / "corrector_pressure.csv").string());
  write_piezo_csv(files.back(), mesh, c.pressure, "eta");
  files.push_back((fs::path(dir) / "corrector_charge.csv").string());
  write_piezo_csv(files.back(), mesh, c.charge, "eta");
  for (std::size_t a = 0; a < c.electrode.size(); ++a) {
    files.push_back((fs::path(dir) / ("corrector_electrode_" + std::to_string(a + 1) + ".csv")).string());
    write_piezo_csv(files.back(), mesh, c.electrode[a], "phi");
  }
  if (c.stokes) {
    const PeriodicMap pm = periodic_map(mesh);
    const NodeSets sets = classify_nodes(mesh, pm);
    for (std::size_t k = 0; k < c.permeability.size(); ++k) {
      const std::string path = (fs::path(dir) / ("corrector_flow_" + std::to_string(k + 1) + ".csv")).string();
      std::ofstream out(path);
      if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
      out << std::setprecision(17) << "# pzflow corrector field v1\nnode,x,y,w_1,w_2,pi\n";
      const FlowPair& f = c.permeability[k];
      for (Index v = 0; v < mesh.node_count(); ++v) {
        if (!sets.fluid[v]) continue;
        const Index m = pm.dof[v];
        out << v << ',' << mesh.nodes(0, v) << ',' << mesh.nodes(1, v) << ',' << f.w[2 * m] << ',' << f.w[2 * m + 1]
            << ',' << f.pi[m] << '\n';
      }
      files.push_back(path);
    }
  }
  return files;
}

}  // namespace pzflow
