#pragma once

#include <array>
#include <string>
#include <vector>

#include "mattopo/sphere.h"
#include "mattopo/topo.h"

namespace mattopo {

/// Non-manifold complex of medial spheres. Simplices reference sphere ids
/// and are stored sorted, both within a simplex and across the lists.
struct MedialMesh {
  std::vector<Index> vertices;
  std::vector<std::array<Index, 2>> edges;
  std::vector<std::array<Index, 3>> faces;
  std::vector<std::array<Index, 4>> tets;  // dual tets not yet thinned
  int tets_pruned = 0;
  int tets_forced = 0;  // removed without a free face (changes the Euler number)

  /// V - E + F - T.
  int euler() const;
  int components() const;
  /// Every face's edges and every edge's vertices are present.
  bool closed() const;
};

/// Vertex per nonempty RPC, edge per RPF, face per RPE, tet per RPV.
MedialMesh extract_dual(const std::vector<RestrictedElements>& elements);

/// Removes every dual tet by elementary collapses through a free face,
/// processing tets by ascending smallest member radius. A tet without a free
/// face is deleted on its own and counted in tets_forced.
MedialMesh thin_medial_mesh(MedialMesh mm, const SphereSet& spheres);

/// `.ma` text: "#v #e #f" header then v / e / f lines with 0-based indices.
std::string ma_string(const MedialMesh& mm, const SphereSet& spheres, const Normalization* denorm = nullptr);
void write_ma(const std::string& path, const MedialMesh& mm, const SphereSet& spheres,
              const Normalization* denorm = nullptr);

struct MaFile {
  std::vector<Vec3> centers;
  std::vector<double> radii;
  std::vector<std::array<Index, 2>> edges;
  std::vector<std::array<Index, 3>> faces;
};
MaFile read_ma(const std::string& path);

}  // namespace mattopo
