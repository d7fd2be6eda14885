#include "pzflow/cell_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "json.hpp"
#include "pzflow/error.hpp"

namespace pzflow {

using nlohmann::json;

std::string region_name(Region r) {
  switch (r.kind) {
    case RegionKind::MatrixPiezo: return "matrix_piezo";
    case RegionKind::MatrixElastic: return "matrix_elastic";
    case RegionKind::Conductor: return "conductor:" + std::to_string(r.electrode);
    case RegionKind::Fluid: return "fluid";
  }
  return "";
}

Region parse_region(const std::string& name) {
  if (name == "matrix_piezo") return piezo();
  if (name == "matrix_elastic") return elastic();
  if (name == "fluid") return fluid();
  const std::string prefix = "conductor:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string digits = name.substr(prefix.size());
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      const int alpha = std::stoi(digits);
      if (alpha >= 1) return conductor(alpha);
    }
  }
  throw Error(ErrorCode::TagError, "unknown region tag '" + name + "'");
}

std::string facet_tag_name(const Facet& f) {
  return f.tag == FacetTag::FluidSolid ? std::string("fluid_solid")
                                       : "conductor_matrix:" + std::to_string(f.electrode);
}

int CellMesh::electrode_count() const {
  int n = 0;
  for (const Region& r : regions)
    if (is_conductor(r)) n = std::max(n, r.electrode);
  return n;
}

PeriodicMap periodic_map(const CellMesh& mesh) {
  const Index n = mesh.node_count();
  PeriodicMap pm;
  pm.master.resize(n);
  for (Index i = 0; i < n; ++i) pm.master[i] = i;
  for (const auto& [m, s] : mesh.periodic_pairs) pm.master[s] = m;
  pm.dof.assign(n, -1);
  for (Index i = 0; i < n; ++i)
    if (pm.master[i] == i) pm.dof[i] = pm.count++;
  for (Index i = 0; i < n; ++i) pm.dof[i] = pm.dof[pm.master[i]];
  return pm;
}

std::vector<EdgeIncidence> edge_incidence(const CellMesh& mesh, const PeriodicMap& pm) {
  std::map<std::array<Index, 2>, std::vector<std::array<Index, 2>>> edges;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    for (Index k = 0; k < 3; ++k) {
      Index a = pm.master[t[k]], b = pm.master[t[(k + 1) % 3]];
      if (a > b) std::swap(a, b);
      edges[{a, b}].push_back({e, k});
    }
  }
  std::vector<EdgeIncidence> out;
  out.reserve(edges.size());
  for (auto& [key, sides] : edges) out.push_back({key, std::move(sides)});
  return out;
}

Mat2 element_jacobian(const CellMesh& mesh, Index e) {
  const auto& t = mesh.elements[e];
  Mat2 J;
  J.col(0) = mesh.nodes.col(t[1]) - mesh.nodes.col(t[0]);
  J.col(1) = mesh.nodes.col(t[2]) - mesh.nodes.col(t[0]);
  return J;
}

double element_area(const CellMesh& mesh, Index e) { return 0.5 * element_jacobian(mesh, e).determinant(); }

double cell_measure(const CellMesh& mesh) {
  return region_measure(mesh, [](Region) { return true; });
}

namespace {

bool facet_less(const Facet& a, const Facet& b) {
  return std::tie(a.verts, a.tag, a.electrode) < std::tie(b.verts, b.tag, b.electrode);
}

}  // namespace

std::vector<Facet> derive_facets(const CellMesh& mesh) {
  const PeriodicMap pm = periodic_map(mesh);
  std::vector<Facet> facets;
  for (const EdgeIncidence& inc : edge_incidence(mesh, pm)) {
    if (inc.sides.size() != 2) continue;
    auto [e0, k0] = inc.sides[0];
    auto [e1, k1] = inc.sides[1];
    Region r0 = mesh.regions[e0], r1 = mesh.regions[e1];
    if (r0 == r1) continue;
    if (is_matrix(r0) && is_matrix(r1)) continue;
    // Put the outer side first: fluid for FluidSolid, matrix for ConductorMatrix.
    if (is_fluid(r1) || (is_conductor(r0) && is_matrix(r1))) {
      std::swap(e0, e1);
      std::swap(k0, k1);
      std::swap(r0, r1);
    }
    Facet f;
    const auto& t = mesh.elements[e0];
    f.verts = {t[k0], t[(k0 + 1) % 3]};
    f.inward_region = r1;
    if (is_fluid(r0) && is_matrix(r1)) {
      f.tag = FacetTag::FluidSolid;
    } else if (is_matrix(r0) && is_conductor(r1)) {
      f.tag = FacetTag::ConductorMatrix;
      f.electrode = r1.electrode;
    } else if (is_fluid(r0) && is_conductor(r1)) {
      throw Error(ErrorCode::TagError, "conductor element " + std::to_string(e1) +
                                           " shares a facet with fluid element " + std::to_string(e0));
    } else {
      throw Error(ErrorCode::TagError, "conductors " + region_name(r0) + " and " + region_name(r1) +
                                           " share a facet");
    }
    facets.push_back(f);
  }
  std::sort(facets.begin(), facets.end(), facet_less);
  return facets;
}

void validate(const CellMesh& mesh) {
  if (mesh.dimension != 2)
    throw Error(ErrorCode::SchemaError, "dimension " + std::to_string(mesh.dimension) + " not supported");
  const Index n = mesh.node_count();
  if (mesh.element_count() == 0) throw Error(ErrorCode::SchemaError, "mesh has no elements");
  if (mesh.regions.size() != mesh.elements.size())
    throw Error(ErrorCode::SchemaError, "one region tag per element required");
  for (const auto& t : mesh.elements)
    for (Index v : t)
      if (v < 0 || v >= n) throw Error(ErrorCode::SchemaError, "element vertex index out of range");

  double total = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) total += std::abs(element_area(mesh, e));
  const double threshold = 1e-14 * total / static_cast<double>(mesh.element_count());
  for (Index e = 0; e < mesh.element_count(); ++e)
    if (element_area(mesh, e) <= threshold)
      throw Error(ErrorCode::ElementInversion, "element " + std::to_string(e) + " has non-positive area");

  std::vector<int> role(n, 0);  // 1 master, 2 slave
  for (const auto& [m, s] : mesh.periodic_pairs) {
    if (m < 0 || m >= n || s < 0 || s >= n || m == s)
      throw Error(ErrorCode::PeriodicityError, "periodic pair index out of range");
    if (role[s] != 0)
      throw Error(ErrorCode::PeriodicityError, "node " + std::to_string(s) + " paired more than once");
    if (role[m] == 2) throw Error(ErrorCode::PeriodicityError, "node " + std::to_string(m) + " is master and slave");
    role[s] = 2;
    role[m] = 1;
  }

  const PeriodicMap pm = periodic_map(mesh);
  for (const EdgeIncidence& inc : edge_incidence(mesh, pm)) {
    if (inc.sides.size() != 2) {
      const Index v = mesh.elements[inc.sides[0][0]][inc.sides[0][1]];
      throw Error(ErrorCode::PeriodicityError,
                  "edge at node " + std::to_string(v) + " has " + std::to_string(inc.sides.size()) +
                      " neighbours; boundary node without periodic partner");
    }
  }

  const int nel = mesh.electrode_count();
  std::vector<double> electrode_area(nel + 1, 0.0);
  for (Index e = 0; e < mesh.element_count(); ++e)
    if (is_conductor(mesh.regions[e])) electrode_area[mesh.regions[e].electrode] += element_area(mesh, e);
  for (int a = 1; a <= nel; ++a)
    if (electrode_area[a] <= 0.0)
      throw Error(ErrorCode::TagError, "electrode indices must be contiguous; conductor:" + std::to_string(a) +
                                           " is missing");

  std::vector<Facet> expected = derive_facets(mesh);
  std::vector<Facet> given = mesh.facets;
  std::sort(given.begin(), given.end(), facet_less);
  if (given != expected)
    throw Error(ErrorCode::TagError, "interface facets do not match the element regions (" +
                                         std::to_string(given.size()) + " given, " +
                                         std::to_string(expected.size()) + " implied)");
}

namespace {

bool closures_intersect(const Rect& a, const Rect& b) {
  return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1;
}

CellMesh structured_grid(int n) {
  CellMesh mesh;
  const Index side = n + 1;
  mesh.nodes.resize(2, side * side);
  for (Index j = 0; j <= n; ++j)
    for (Index i = 0; i <= n; ++i)
      mesh.nodes.col(j * side + i) = Vec2(double(i) / n, double(j) / n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Index v00 = j * side + i, v10 = v00 + 1, v01 = v00 + side, v11 = v01 + 1;
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }
  for (Index j = 0; j < n; ++j) mesh.periodic_pairs.push_back({j * side, j * side + n});
  for (Index i = 0; i < n; ++i) mesh.periodic_pairs.push_back({i, n * side + i});
  mesh.periodic_pairs.push_back({0, n * side + n});
  return mesh;
}

Vec2 centroid(const CellMesh& mesh, Index e) {
  const auto& t = mesh.elements[e];
  return (mesh.nodes.col(t[0]) + mesh.nodes.col(t[1]) + mesh.nodes.col(t[2])) / 3.0;
}

}  // namespace

CellMesh generate_uniform_cell(int resolution, Region region) {
  if (resolution < 2) throw Error(ErrorCode::ResolutionTooCoarse, "resolution must be at least 2");
  CellMesh mesh = structured_grid(resolution);
  mesh.regions.assign(mesh.elements.size(), region);
  mesh.facets = derive_facets(mesh);
  return mesh;
}

CellMesh generate_canonical_cell(int resolution, const CanonicalGeometry& g) {
  const double h = g.channel_halfwidth;
  if (g.with_fluid && (!(h > 0.0) || h >= 0.5))
    throw Error(ErrorCode::ChannelDegenerate, "channel half-width must lie in (0, 0.5)");
  if (g.bulge_amplitude < 0.0) throw Error(ErrorCode::ChannelDegenerate, "bulge amplitude must be non-negative");
  const double hmax = g.with_fluid ? h + g.bulge_amplitude : 0.0;
  if (hmax >= 0.5) throw Error(ErrorCode::ChannelDegenerate, "bulged channel fills the cell");
  const Rect strip{-1.0, 0.5 - hmax, 2.0, 0.5 + hmax};
  for (std::size_t a = 0; a < g.electrodes.size(); ++a) {
    const Rect& r = g.electrodes[a];
    const std::string name = "electrode " + std::to_string(a + 1);
    if (!(r.x0 < r.x1 && r.y0 < r.y1)) throw Error(ErrorCode::ConfigError, name + " has empty extent");
    if (r.x0 <= 0.0 || r.y0 <= 0.0 || r.x1 >= 1.0 || r.y1 >= 1.0)
      throw Error(ErrorCode::RegionOverlap, name + " touches the cell boundary");
    if (g.with_fluid && closures_intersect(r, strip))
      throw Error(ErrorCode::RegionOverlap, name + " intersects the fluid channel");
    for (std::size_t b = 0; b < a; ++b)
      if (closures_intersect(r, g.electrodes[b]))
        throw Error(ErrorCode::RegionOverlap, name + " intersects electrode " + std::to_string(b + 1));
  }
  if (resolution < 2) throw Error(ErrorCode::ResolutionTooCoarse, "resolution must be at least 2");

  CellMesh mesh = structured_grid(resolution);
  mesh.regions.resize(mesh.elements.size());
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const Vec2 c = centroid(mesh, e);
    const double s = std::sin(std::numbers::pi * c.x());
    const double half = h + g.bulge_amplitude * s * s;
    const double dist = std::abs(c.y() - 0.5);
    Region r = dist < h + g.piezo_thickness ? piezo() : elastic();
    if (g.with_fluid && dist < half) r = fluid();
    for (std::size_t a = 0; a < g.electrodes.size(); ++a) {
      const Rect& q = g.electrodes[a];
      if (c.x() > q.x0 && c.x() < q.x1 && c.y() > q.y0 && c.y() < q.y1) r = conductor(int(a) + 1);
    }
    mesh.regions[e] = r;
  }

  std::vector<Region> required = {piezo(), elastic()};
  if (g.with_fluid) required.push_back(fluid());
  for (std::size_t a = 0; a < g.electrodes.size(); ++a) required.push_back(conductor(int(a) + 1));
  for (const Region& r : required)
    if (std::find(mesh.regions.begin(), mesh.regions.end(), r) == mesh.regions.end())
      throw Error(ErrorCode::ResolutionTooCoarse, "region " + region_name(r) + " receives no elements");
  try {
    mesh.facets = derive_facets(mesh);
  } catch (const Error& err) {
    throw Error(ErrorCode::ResolutionTooCoarse, std::string("regions merge at this resolution: ") + err.what());
  }
  validate(mesh);
  return mesh;
}

void save_mesh(const CellMesh& mesh, const std::string& path) {
  json j;
  j["dimension"] = mesh.dimension;
  json nodes = json::array();
  for (Index i = 0; i < mesh.node_count(); ++i) nodes.push_back({mesh.nodes(0, i), mesh.nodes(1, i)});
  j["nodes"] = std::move(nodes);
  json elements = json::array();
  for (Index e = 0; e < mesh.element_count(); ++e)
    elements.push_back({{"verts", mesh.elements[e]}, {"region", region_name(mesh.regions[e])}});
  j["elements"] = std::move(elements);
  json facets = json::array();
  for (const Facet& f : mesh.facets)
    facets.push_back({{"verts", f.verts}, {"tag", facet_tag_name(f)}, {"inward_region", region_name(f.inward_region)}});
  j["facets"] = std::move(facets);
  j["periodic_pairs"] = mesh.periodic_pairs;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write mesh file " + path);
  out << j.dump(1) << '\n';
}

namespace {

Facet parse_facet(const json& jf) {
  Facet f;
  f.verts = jf.at("verts").get<std::array<Index, 2>>();
  const std::string tag = jf.at("tag").get<std::string>();
  f.inward_region = parse_region(jf.at("inward_region").get<std::string>());
  const std::string cm = "conductor_matrix:";
  if (tag == "fluid_solid") {
    f.tag = FacetTag::FluidSolid;
  } else if (tag.rfind(cm, 0) == 0) {
    f.tag = FacetTag::ConductorMatrix;
    f.electrode = parse_region("conductor:" + tag.substr(cm.size())).electrode;
  } else {
    throw Error(ErrorCode::TagError, "unknown facet tag '" + tag + "'");
  }
  return f;
}

}  // namespace

CellMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open mesh file " + path);
  CellMesh mesh;
  try {
    const json j = json::parse(in);
    mesh.dimension = j.at("dimension").get<int>();
    if (mesh.dimension != 2)
      throw Error(ErrorCode::SchemaError, "dimension " + std::to_string(mesh.dimension) + " not supported");
    const json& nodes = j.at("nodes");
    mesh.nodes.resize(2, static_cast<Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].size() != 2) throw Error(ErrorCode::SchemaError, "node coordinates must have 2 entries");
      mesh.nodes(0, Index(i)) = nodes[i][0].get<double>();
      mesh.nodes(1, Index(i)) = nodes[i][1].get<double>();
    }
    for (const json& je : j.at("elements")) {
      mesh.elements.push_back(je.at("verts").get<std::array<Index, 3>>());
      mesh.regions.push_back(parse_region(je.at("region").get<std::string>()));
    }
    for (const json& jf : j.at("facets")) mesh.facets.push_back(parse_facet(jf));
    mesh.periodic_pairs = j.at("periodic_pairs").get<std::vector<std::array<Index, 2>>>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("malformed mesh file: ") + ex.what());
  }
  validate(mesh);
  return mesh;
}

void check_velocity(const CellMesh& mesh, const VelocityField& V, double tol) {
  if (V.values.rows() != 2 || V.values.cols() != mesh.node_count())
    throw Error(ErrorCode::NonPeriodicVelocity, "velocity field size does not match the mesh");
  const double scale = std::max(1.0, V.values.cwiseAbs().maxCoeff());
  for (const auto& [m, s] : mesh.periodic_pairs) {
    const Vec2 jump = V.values.col(s) - V.values.col(m) - V.gradient * (mesh.nodes.col(s) - mesh.nodes.col(m));
    if (jump.norm() > tol * scale)
      throw Error(ErrorCode::NonPeriodicVelocity,
                  "velocity differs across periodic pair (" + std::to_string(m) + ", " + std::to_string(s) + ")");
  }
}

CellMesh perturb_mesh(const CellMesh& mesh, const VelocityField& V, double tau) {
  check_velocity(mesh, V);
  CellMesh out = mesh;
  out.nodes = mesh.nodes + tau * V.values;
  double total = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) total += std::abs(element_area(mesh, e));
  const double threshold = 1e-14 * total / static_cast<double>(mesh.element_count());
  for (Index e = 0; e < out.element_count(); ++e)
    if (element_area(out, e) <= threshold)
      throw Error(ErrorCode::ElementInversion, "element " + std::to_string(e) + " inverts at tau = " +
                                                   std::to_string(tau));
  return out;
}

}  // namespace pzflow
