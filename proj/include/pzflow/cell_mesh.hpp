#pragma once

#include <array>
#include <string>
#include <vector>

#include "pzflow/types.hpp"

namespace pzflow {

enum class RegionKind { MatrixPiezo, MatrixElastic, Conductor, Fluid };

struct Region {
  RegionKind kind = RegionKind::MatrixPiezo;
  int electrode = 0;  // 1-based electrode index for conductors, 0 otherwise

  friend bool operator==(const Region&, const Region&) = default;
};

inline Region piezo() { return {RegionKind::MatrixPiezo, 0}; }
inline Region elastic() { return {RegionKind::MatrixElastic, 0}; }
inline Region conductor(int alpha) { return {RegionKind::Conductor, alpha}; }
inline Region fluid() { return {RegionKind::Fluid, 0}; }

inline bool is_matrix(Region r) {
  return r.kind == RegionKind::MatrixPiezo || r.kind == RegionKind::MatrixElastic;
}
inline bool is_solid(Region r) { return r.kind != RegionKind::Fluid; }
inline bool is_fluid(Region r) { return r.kind == RegionKind::Fluid; }
inline bool is_conductor(Region r) { return r.kind == RegionKind::Conductor; }

/// "matrix_piezo", "matrix_elastic", "conductor:<alpha>", "fluid".
std::string region_name(Region r);
Region parse_region(const std::string& name);

enum class FacetTag { FluidSolid, ConductorMatrix };

/// Interface edge. `verts` are ordered counter-clockwise in the element lying
/// outside `inward_region`, so the right-hand normal of verts[0] -> verts[1]
/// points into `inward_region` (fluid -> solid on FluidSolid facets).
struct Facet {
  std::array<Index, 2> verts{};
  FacetTag tag = FacetTag::FluidSolid;
  int electrode = 0;
  Region inward_region;

  friend bool operator==(const Facet&, const Facet&) = default;
};

std::string facet_tag_name(const Facet& f);

struct CellMesh {
  int dimension = 2;
  Points nodes;                                // 2 x N
  std::vector<std::array<Index, 3>> elements;  // counter-clockwise triangles
  std::vector<Region> regions;                 // one per element
  std::vector<Facet> facets;
  std::vector<std::array<Index, 2>> periodic_pairs;  // (master, slave)

  Index node_count() const { return nodes.cols(); }
  Index element_count() const { return static_cast<Index>(elements.size()); }
  int electrode_count() const;

  friend bool operator==(const CellMesh& a, const CellMesh& b) {
    return a.dimension == b.dimension && a.nodes == b.nodes && a.elements == b.elements &&
           a.regions == b.regions && a.facets == b.facets && a.periodic_pairs == b.periodic_pairs;
  }
};

/// Periodic identification: every node mapped to its master and to a compact
/// index over masters.
struct PeriodicMap {
  std::vector<Index> master;
  std::vector<Index> dof;
  Index count = 0;
};

PeriodicMap periodic_map(const CellMesh& mesh);

/// Edge adjacency modulo periodicity. Each entry lists the (element, local edge)
/// pairs sharing one identified edge; local edge k joins vertices k and k+1.
struct EdgeIncidence {
  std::array<Index, 2> key{};  // sorted master indices
  std::vector<std::array<Index, 2>> sides;
};

std::vector<EdgeIncidence> edge_incidence(const CellMesh& mesh, const PeriodicMap& pm);

Mat2 element_jacobian(const CellMesh& mesh, Index e);
double element_area(const CellMesh& mesh, Index e);  // signed
double cell_measure(const CellMesh& mesh);

template <typename Pred>
double region_measure(const CellMesh& mesh, Pred pred) {
  double s = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e)
    if (pred(mesh.regions[e])) s += element_area(mesh, e);
  return s;
}

/// Interface facets implied by the element regions.
std::vector<Facet> derive_facets(const CellMesh& mesh);

/// Throws the matching Error for any violated mesh invariant.
void validate(const CellMesh& mesh);

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct CanonicalGeometry {
  double channel_halfwidth = 0.125;
  double bulge_amplitude = 0.0;  // channel half-width grows by a*sin^2(pi y1)
  double piezo_thickness = 0.25;  // piezo band width on each side of the channel
  std::vector<Rect> electrodes = {{0.25, 0.25, 0.75, 0.3125}, {0.25, 0.6875, 0.75, 0.75}};
  bool with_fluid = true;
};

CellMesh generate_canonical_cell(int resolution, const CanonicalGeometry& geometry = {});

/// Structured single-region cell, used for the homogeneous reference case.
CellMesh generate_uniform_cell(int resolution, Region region);

CellMesh load_mesh(const std::string& path);
void save_mesh(const CellMesh& mesh, const std::string& path);

/// Nodal design velocity. `values` holds one column per node; the field is
/// periodic up to the affine part: V(slave) - V(master) = gradient (y_s - y_m).
struct VelocityField {
  Points values;
  Mat2 gradient = Mat2::Zero();
};

/// Throws NonPeriodicVelocity if V breaks the periodicity contract.
void check_velocity(const CellMesh& mesh, const VelocityField& V, double tol = 1e-9);

CellMesh perturb_mesh(const CellMesh& mesh, const VelocityField& V, double tau);

}  // namespace pzflow
