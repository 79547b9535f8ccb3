#pragma once

#include <vector>

#include "mattopo/envelope.h"
#include "mattopo/medial_mesh.h"
#include "mattopo/sphere.h"
#include "mattopo/tet_mesh.h"

namespace mattopo {

struct GeometryParams {
  double delta_eps = 0.6;  // percent of the bounding-box diagonal
  int max_insertions = 256;
  ShrinkParams shrink;
};

struct GeometryStats {
  double max_distance = 0.0;  // percent of the diagonal, outside the envelope
  double max_depth = 0.0;     // percent of the diagonal, inside the envelope (reported only)
  double mean_distance = 0.0;
  int violations = 0;
  int feature_violations = 0;
  int inserted = 0;
};

/// Per-sample distance, in percent of the diagonal, to the whole envelope.
std::vector<double> sample_envelope_distances(const TetMesh& mesh, const MedialMesh& mm, const SphereSet& spheres,
                                              const std::vector<SurfaceSample>& samples, int threads = 1);

/// Convex feature samples are measured against the cones joining zero-radius
/// spheres and receive a zero-radius sphere when too far; other samples are
/// measured against every primitive and receive a shrunk sphere pinned at
/// the sample. At most `max_insertions` spheres, worst samples first.
std::vector<MedialSphere> geometry_check_and_insert(const TetMesh& mesh, const MedialMesh& mm,
                                                    const SphereSet& spheres,
                                                    const std::vector<SurfaceSample>& samples,
                                                    const SurfaceIndex& surface, const GeometryParams& params,
                                                    GeometryStats* stats = nullptr, int threads = 1);

}  // namespace mattopo
