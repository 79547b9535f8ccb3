#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mattopo/common.h"
#include "mattopo/predicates.h"

namespace mattopo {

/// Incremental 3D regular (weighted Delaunay) triangulation. Points carry an
/// external id; adjacency in the triangulation is adjacency of the power
/// cells. A bounding super-tetrahedron keeps every real cell bounded; it sits
/// far enough away that power cells within `domain` are unaffected.
class RegularTriangulation {
 public:
  explicit RegularTriangulation(const Aabb& domain);

  /// Inserts a weighted point with a unique, non-negative external id.
  /// Returns false when the point is hidden (its power cell is empty).
  bool insert(Index id, const Vec3& p, double weight);

  bool contains(Index id) const;
  bool is_hidden(Index id) const;

  /// Sorted neighbour ids for every inserted id (index = external id, empty
  /// for ids never inserted). Hidden points report the real vertices of the
  /// tet that contained them when they were hidden.
  std::vector<std::vector<Index>> neighbor_sets() const;

  /// Bounding box of the power cell of `id`, intersected with `clip`. Cells
  /// reaching the super-tetrahedron return `clip` itself.
  std::vector<Aabb> cell_bounds(const Aabb& clip) const;

  /// Tets with only real vertices, as external ids.
  std::vector<std::array<Index, 4>> finite_tets() const;

  std::size_t num_vertices() const { return points_.size() - 4; }
  std::size_t num_live_tets() const;

 private:
  struct Tet {
    std::array<int, 4> v{};
    std::array<int, 4> nbr{-1, -1, -1, -1};  // nbr[k] is opposite v[k]
    bool alive = true;
  };

  int locate(const Vec3& p);
  bool conflict(int t, int vertex) const;
  int new_tet(const std::array<int, 4>& v);
  bool is_super(int vertex) const { return vertex < 4; }

  std::vector<WeightedPoint> points_;   // internal vertex index -> point
  std::vector<Index> external_;         // internal -> external id
  std::vector<int> internal_;           // external -> internal (-1 absent)
  std::vector<char> hidden_;            // per internal vertex
  std::vector<std::vector<Index>> hidden_nbrs_;  // per internal vertex
  std::vector<Tet> tets_;
  std::vector<int> free_;
  int last_ = 0;
  std::uint64_t rng_ = 0x9E3779B97F4A7C15ull;
};

}  // namespace mattopo
