#pragma once

#include <random>
#include <string>

#include "mattopo/pipeline.h"
#include "mattopo/rpd.h"
#include "mattopo/shapes.h"
#include "mattopo/sphere.h"
#include "mattopo/tet_mesh.h"
#include "mattopo/topo.h"

namespace mattopo::testing {

inline TetMesh fixture(const std::string& name, bool normalize = true, double angle_deg = 30.0) {
  RawTetMesh raw = shapes::by_name(name);
  TetMesh mesh = build_tet_mesh(raw.vertices, raw.tets, normalize);
  detect_features(mesh, angle_deg);
  return mesh;
}

inline Vec3 tet_centroid(const TetMesh& mesh, Index t) {
  const auto& v = mesh.tets[t];
  return 0.25 * (mesh.vertices[v[0]] + mesh.vertices[v[1]] + mesh.vertices[v[2]] + mesh.vertices[v[3]]);
}

inline MedialSphere sphere_at(const Vec3& c, double r) {
  MedialSphere m;
  m.center = c;
  m.radius = r;
  return m;
}

/// Spheres centred at random tet centroids with a radius between 20% and
/// 100% of the distance to the boundary.
inline SphereSet random_spheres(const TetMesh& mesh, const SurfaceIndex& surface, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SphereSet set(1e-3 * mesh.bbox_diag);
  std::uniform_int_distribution<std::size_t> pick(0, mesh.tets.size() - 1);
  std::uniform_real_distribution<double> frac(0.2, 1.0);
  while (static_cast<int>(set.size()) < count) {
    const Vec3 c = tet_centroid(mesh, static_cast<Index>(pick(rng)));
    set.add(sphere_at(c, surface.nearest(c).distance * frac(rng)));
  }
  return set;
}

/// Uniform random point inside a random tet, weighted by volume.
class VolumeSampler {
 public:
  explicit VolumeSampler(const TetMesh& mesh) : mesh_(&mesh) {
    double acc = 0.0;
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
      acc += mesh.tet_volume(t);
      cumulative_.push_back(acc);
    }
  }
  template <class Rng>
  std::pair<Vec3, Index> operator()(Rng& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double x = uni(rng) * cumulative_.back();
    const Index t = static_cast<Index>(std::lower_bound(cumulative_.begin(), cumulative_.end(), x) -
                                       cumulative_.begin());
    double b[4];
    double s = 0.0;
    for (double& w : b) s += (w = -std::log(1.0 - uni(rng)));
    Vec3 p = Vec3::Zero();
    for (int k = 0; k < 4; ++k) p += b[k] / s * mesh_->vertices[mesh_->tets[t][k]];
    return {p, t};
  }

 private:
  const TetMesh* mesh_;
  std::vector<double> cumulative_;
};

inline PipelineConfig quick_config(double delta_eps = 1.5) {
  PipelineConfig c;
  c.delta_eps = delta_eps;
  c.init_spheres = 50;
  c.seed = 1;
  c.max_rounds = 200;
  return c;
}

}  // namespace mattopo::testing
