#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mattopo/envelope.h"
#include "mattopo/medial_mesh.h"

namespace mattopo {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 3>> tris;

  Aabb bounds() const;
  double area() const;
  /// V - E + F.
  int euler() const;
  /// Every edge is shared by exactly two triangles.
  bool watertight() const;
  int components() const;
};

/// Boundary triangles of a tet mesh.
TriangleMesh surface_of(const TetMesh& mesh);

struct ReconstructStats {
  std::array<int, 3> grid{0, 0, 0};
  double cell = 0.0;
  std::size_t blocks_total = 0;
  std::size_t blocks_evaluated = 0;
  int thin_spheres = 0;  // radius below two grid cells
};

/// Zero level set of the envelope signed distance, contoured with marching
/// tetrahedra on a Kuhn-split grid with `resolution` cells along the longest
/// axis. Blocks whose centre distance exceeds their half diagonal are skipped.
TriangleMesh reconstruct_envelope(const MedialMesh& mm, const SphereSet& spheres, int resolution = 256,
                                  int threads = 1, ReconstructStats* stats = nullptr);

struct HausdorffResult {
  double eps1 = 0.0;  // a -> b
  double eps2 = 0.0;  // b -> a
  double eps_max = 0.0;
};

/// Uniform area-weighted points on a triangle mesh (deterministic in seed).
std::vector<Vec3> sample_triangle_mesh(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

/// Sampled one-sided distances (mesh vertices plus `samples` random points
/// per side), in percent of a's bounding-box diagonal.
HausdorffResult hausdorff(const TriangleMesh& a, const TriangleMesh& b, std::size_t samples = 100000,
                          std::uint64_t seed = 1, int threads = 1);

}  // namespace mattopo
