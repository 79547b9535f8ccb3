#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mattopo/bvh.h"
#include "mattopo/convex_cell.h"
#include "mattopo/euler_payload.h"
#include "mattopo/regular_triangulation.h"
#include "mattopo/sphere.h"
#include "mattopo/tet_mesh.h"

namespace mattopo {

/// Half-space of points power-closer to mi than to mj, tagged with mj's id.
/// Computed canonically for the ordered pair so that swapping the arguments
/// yields the exact negation. Throws on coincident centres.
///
/// With `jitter` > 0 each weight r^2 is raised by jitter * u(id), u a fixed
/// hash of the sphere id into [0, 1). This breaks cospherical configurations
/// (where five or more cells meet in a point) without moving any centre.
CellPlane radical_plane(const MedialSphere& mi, const MedialSphere& mj, double jitter = 0.0);

/// r^2 + jitter * u(id).
double power_weight(const MedialSphere& m, double jitter);

/// Side test with the exact-tie rule: a point on the plane belongs to the
/// sphere with the smaller id.
inline bool radical_inside(const CellPlane& plane_for_i, Index i, const Vec3& x) {
  const double v = plane_for_i.eval(x);
  return i < plane_for_i.tag ? v >= 0.0 : v > 0.0;
}

/// Symbolic identity of a cell vertex: the lowest-dimensional mesh element
/// containing it plus the spheres whose cells it bounds. Equal keys mean the
/// same point in every cell that produces it.
struct VertexKey {
  enum Kind : std::uint8_t { kMeshVertex = 0, kMeshEdge = 1, kMeshFace = 2, kTetInterior = 3 };
  std::uint8_t kind = kMeshVertex;
  Index element = kInvalidIndex;
  std::array<Index, 4> spheres{kInvalidIndex, kInvalidIndex, kInvalidIndex, kInvalidIndex};

  int num_spheres() const;
  bool has_sphere(Index s) const;
  friend bool operator==(const VertexKey& a, const VertexKey& b) {
    return a.kind == b.kind && a.element == b.element && a.spheres == b.spheres;
  }
  friend bool operator<(const VertexKey& a, const VertexKey& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.element != b.element) return a.element < b.element;
    return a.spheres < b.spheres;
  }
};

struct VertexKeyHash {
  std::size_t operator()(const VertexKey& k) const;
};

/// Clipped piece of one tet belonging to one sphere.
struct RpdCell {
  Index sphere = kInvalidIndex;
  Index tet = kInvalidIndex;
  ConvexCell cell;
  std::vector<VertexKey> keys;  // one per cell vertex
  double volume = 0.0;
};

struct RpdOptions {
  int threads = 1;
  double eps_clip = 0.0;       // 0 selects 1e-9 * diag
  double weight_jitter = -1.0;  // negative selects 1e-9 * diag^2; 0 disables
};

struct RpdStats {
  std::uint64_t candidate_tets = 0;
  std::uint64_t related_tets = 0;
  std::uint64_t clipped_cells = 0;
  std::uint64_t position_fallbacks = 0;
  int rounds = 0;
  std::size_t last_dirty = 0;
};

/// Volumetric restricted power diagram with partial updates. Spheres are
/// referenced by their ids in the SphereSet passed to update().
class RpdEngine {
 public:
  RpdEngine(const TetMesh& mesh, RpdOptions options = {});

  /// Inserts every active sphere not yet in the triangulation, recomputes
  /// neighbour sets, and re-clips exactly the spheres whose neighbour set or
  /// visibility changed. Returns the re-clipped (dirty) sphere ids.
  std::vector<Index> update(const SphereSet& spheres);

  const TetMesh& mesh() const { return *mesh_; }
  const PayloadTable& payloads() const { return payloads_; }
  const std::vector<std::vector<Index>>& neighbors() const { return neighbors_; }
  const std::vector<Index>& neighbors(Index s) const { return neighbors_[s]; }
  bool is_hidden(Index s) const { return tri_.is_hidden(s); }
  const std::vector<RpdCell>& cells(Index s) const;
  const std::vector<Index>& related_tets(Index s) const;
  std::size_t num_spheres() const { return cells_.size(); }
  double sphere_volume(Index s) const;
  double total_volume() const;
  const RpdStats& stats() const { return stats_; }
  double eps_clip() const { return eps_clip_; }
  double weight_jitter() const { return jitter_; }
  /// Radical plane as used by this engine (with its weight jitter).
  CellPlane plane(const SphereSet& spheres, Index i, Index j) const {
    return radical_plane(spheres[i], spheres[j], jitter_);
  }
  const RegularTriangulation& triangulation() const { return tri_; }

  /// Conservative test whether the power cell of `sphere`, bounded by the
  /// planes against `nbrs`, can meet tet `tet`. Never rejects a tet the cell
  /// intersects.
  bool tet_relates_to_sphere(const SphereSet& spheres, Index sphere, const std::vector<Index>& nbrs,
                             Index tet) const;

  /// Clips tet `tet` for `sphere` by the radical planes against `planes_of`
  /// (sorted ids). Returns an empty cell when nothing remains.
  RpdCell clip_cell(const SphereSet& spheres, Index sphere, const std::vector<Index>& planes_of,
                    Index tet, std::uint64_t* fallbacks = nullptr) const;

  /// Symbolic key of a vertex of a cell of `sphere` inside `tet`.
  VertexKey vertex_key(const ConvexCell& cell, int vertex, Index tet, Index sphere) const;

  /// Canonical position of a key (same bits in every tet producing it).
  /// Returns false when the defining system is singular.
  bool key_position(const SphereSet& spheres, const VertexKey& key, Vec3& out) const;

 private:
  void recompute_sphere(const SphereSet& spheres, Index s, const Aabb& bound, std::vector<RpdCell>& out,
                        std::vector<Index>& related, std::uint64_t& candidates,
                        std::uint64_t& fallbacks) const;
  int local_edge(Index tet, int a, int b) const;

  const TetMesh* mesh_;
  RpdOptions options_;
  double eps_clip_;
  double jitter_;
  PayloadTable payloads_;
  Bvh tet_bvh_;
  RegularTriangulation tri_;
  std::vector<char> inserted_;
  std::vector<std::vector<Index>> neighbors_;
  std::vector<char> hidden_;
  std::vector<std::vector<RpdCell>> cells_;
  std::vector<std::vector<Index>> related_;
  RpdStats stats_;
};

/// Power-cell neighbours by exhaustive clipping of `box` (as a tet
/// enclosing it) by every other sphere; a pair is adjacent when its shared
/// facet has area above `min_area`.
std::vector<std::vector<Index>> brute_force_neighbors(const SphereSet& spheres, const Aabb& box,
                                                      double min_area, double jitter = 0.0);

/// Clips a tet of the mesh for `sphere` against every other active sphere
/// (no filtering); the oracle for the tet relation filter and partial updates.
ConvexCell brute_force_cell(const TetMesh& mesh, const SphereSet& spheres, Index sphere, Index tet,
                            double jitter = 0.0);

/// Writes one OBJ per sphere (radical and surface facets) plus
/// rpd_summary.json into `dir`.
void export_rpd_debug(const RpdEngine& rpd, const SphereSet& spheres, const std::string& dir);

}  // namespace mattopo
