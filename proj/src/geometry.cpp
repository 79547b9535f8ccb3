#include "mattopo/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "mattopo/parallel.h"

namespace mattopo {

namespace {

bool is_convex_feature_sample(const TetMesh& mesh, const SurfaceSample& s) {
  if (s.kind == SampleKind::kCorner) return true;
  if (s.kind == SampleKind::kFeatureEdge)
    return s.source >= 0 && mesh.feature_edges[s.source].kind == FeatureKind::kConvex;
  return false;
}

// Zero-radius spheres and the medial edges joining two of them.
std::vector<EnvelopePrimitive> feature_primitives(const MedialMesh& mm, const SphereSet& spheres) {
  std::vector<EnvelopePrimitive> out;
  for (Index v : mm.vertices)
    if (spheres[v].is_feature()) out.push_back({EnvelopePrimitive::kSphere, {v, kInvalidIndex, kInvalidIndex}});
  for (const auto& e : mm.edges)
    if (spheres[e[0]].is_feature() && spheres[e[1]].is_feature())
      out.push_back({EnvelopePrimitive::kCone, {e[0], e[1], kInvalidIndex}});
  return out;
}

}  // namespace

std::vector<double> sample_envelope_distances(const TetMesh& mesh, const MedialMesh& mm, const SphereSet& spheres,
                                              const std::vector<SurfaceSample>& samples, int threads) {
  const EnvelopeIndex index(spheres, envelope_primitives(mm));
  std::vector<double> out(samples.size());
  const double scale = 100.0 / mesh.bbox_diag;
  parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = index.distance(samples[i].position) * scale; });
  return out;
}

std::vector<MedialSphere> geometry_check_and_insert(const TetMesh& mesh, const MedialMesh& mm,
                                                    const SphereSet& spheres,
                                                    const std::vector<SurfaceSample>& samples,
                                                    const SurfaceIndex& surface, const GeometryParams& params,
                                                    GeometryStats* stats, int threads) {
  const EnvelopeIndex all(spheres, envelope_primitives(mm));
  const EnvelopeIndex features(spheres, feature_primitives(mm, spheres));
  const double scale = 100.0 / mesh.bbox_diag;

  std::vector<double> dist(samples.size());
  std::vector<double> depth(samples.size());
  std::vector<double> feature_dist(samples.size(), 0.0);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const double sd = all.empty() ? std::numeric_limits<double>::infinity() : all.signed_distance(samples[i].position);
    dist[i] = std::max(sd, 0.0) * scale;
    depth[i] = std::max(-sd, 0.0) * scale;
    if (is_convex_feature_sample(mesh, samples[i])) feature_dist[i] = features.distance(samples[i].position) * scale;
  });

  GeometryStats st;
  std::vector<std::pair<double, std::size_t>> violators;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    st.max_distance = std::max(st.max_distance, dist[i]);
    st.max_depth = std::max(st.max_depth, depth[i]);
    st.mean_distance += dist[i];
    const bool feature = is_convex_feature_sample(mesh, samples[i]);
    const double d = feature ? std::max(dist[i], feature_dist[i]) : dist[i];
    if (d > params.delta_eps) {
      ++st.violations;
      if (feature) ++st.feature_violations;
      violators.emplace_back(-d, i);
    }
  }
  if (!samples.empty()) st.mean_distance /= static_cast<double>(samples.size());
  std::stable_sort(violators.begin(), violators.end());

  std::vector<MedialSphere> out;
  auto duplicate = [&](const MedialSphere& m) {
    if (spheres.find_duplicate(m) != kInvalidIndex) return true;
    for (const MedialSphere& o : out) {
      const double d = (o.center - m.center).norm();
      if (d == 0.0 || (d < spheres.dedup_radius() && std::abs(o.radius - m.radius) < spheres.dedup_radius()))
        return true;
    }
    return false;
  };
  for (const auto& [neg, i] : violators) {
    if (static_cast<int>(out.size()) >= params.max_insertions) break;
    const SurfaceSample& s = samples[i];
    MedialSphere m;
    if (is_convex_feature_sample(mesh, s)) {
      m = make_feature_sphere(mesh, s.position,
                              s.kind == SampleKind::kCorner ? SphereKind::kCorner : SphereKind::kFeatureEdge);
    } else {
      m = sphere_shrink(surface, s.position, s.normal, params.shrink);
      if (!m.center.allFinite() || !(m.radius > 0.0)) continue;
    }
    if (duplicate(m)) continue;
    out.push_back(std::move(m));
  }
  st.inserted = static_cast<int>(out.size());
  if (stats) *stats = st;
  return out;
}

}  // namespace mattopo
