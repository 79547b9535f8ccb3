#include "mattopo/features.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "mattopo/mesh_io.h"

namespace mattopo {

std::vector<FeatureSegment> segment_feature_lines(const TetMesh& mesh, double h) {
  std::vector<FeatureSegment> out;
  for (std::size_t li = 0; li < mesh.feature_lines.size(); ++li) {
    const FeatureLine& line = mesh.feature_lines[li];
    const std::size_t n_edges = line.edges.size();
    if (n_edges == 0) continue;
    std::vector<double> cum(n_edges + 1, 0.0);
    for (std::size_t k = 0; k < n_edges; ++k)
      cum[k + 1] = cum[k] + (mesh.vertices[line.verts[k + 1]] - mesh.vertices[line.verts[k]]).norm();
    const double L = cum.back();
    if (!(L > 0.0)) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(L / h)));
    auto locate = [&](double s, Index* edge) {
      std::size_t k = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin();
      k = std::clamp<std::size_t>(k, 1, n_edges) - 1;
      const double len = cum[k + 1] - cum[k];
      const double t = len > 0.0 ? std::clamp((s - cum[k]) / len, 0.0, 1.0) : 0.0;
      if (edge) *edge = line.edges[k];
      const Vec3& a = mesh.vertices[line.verts[k]];
      const Vec3& b = mesh.vertices[line.verts[k + 1]];
      return Vec3((1.0 - t) * a + t * b);
    };
    for (int k = 0; k < n; ++k) {
      FeatureSegment seg;
      seg.line = static_cast<Index>(li);
      seg.kind = line.kind;
      seg.a = locate(L * k / n, nullptr);
      seg.b = locate(L * (k + 1) / n, nullptr);
      seg.midpoint = locate(L * (k + 0.5) / n, &seg.edge);
      out.push_back(seg);
    }
  }
  return out;
}

Index power_nearest_sphere(const SphereSet& spheres, const Vec3& p) {
  Index best = kInvalidIndex;
  double best_d = std::numeric_limits<double>::infinity();
  for (const MedialSphere& s : spheres.all()) {
    if (s.deleted) continue;
    const double d = power_distance(s, p);
    if (d < best_d) {
      best_d = d;
      best = s.id;
    }
  }
  return best;
}

FeatureCoverage feature_coverage(const std::vector<FeatureSegment>& segments, const SphereSet& spheres) {
  FeatureCoverage cov;
  cov.owner.resize(segments.size(), kInvalidIndex);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (segments[k].kind != FeatureKind::kConvex) continue;
    cov.owner[k] = power_nearest_sphere(spheres, segments[k].midpoint);
    if (cov.owner[k] == kInvalidIndex || !spheres[cov.owner[k]].is_feature())
      cov.uncovered.push_back(static_cast<Index>(k));
  }
  return cov;
}

namespace {

class Batch {
 public:
  explicit Batch(const SphereSet& spheres) : spheres_(spheres) {}
  bool push(MedialSphere m) {
    if (!m.center.allFinite() || !std::isfinite(m.radius)) return false;
    if (spheres_.find_duplicate(m) != kInvalidIndex) return false;
    for (const MedialSphere& o : out_) {
      const double d = (o.center - m.center).norm();
      if (d == 0.0 ||
          (d < spheres_.dedup_radius() && std::abs(o.radius - m.radius) < spheres_.dedup_radius()))
        return false;
    }
    out_.push_back(std::move(m));
    return true;
  }
  std::vector<MedialSphere> take() { return std::move(out_); }

 private:
  const SphereSet& spheres_;
  std::vector<MedialSphere> out_;
};

Index find_surface_edge(const TetMesh& mesh, Index a, Index b) {
  const std::array<Index, 2> key = {std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(mesh.surface_edges.begin(), mesh.surface_edges.end(), key);
  if (it == mesh.surface_edges.end() || *it != key) return kInvalidIndex;
  return static_cast<Index>(it - mesh.surface_edges.begin());
}

}  // namespace

std::vector<MedialSphere> concave_fan_spheres(const SurfaceIndex& surface, const Vec3& p, const Vec3& na,
                                              const Vec3& nb, double max_bulge, const ShrinkParams& shrink) {
  constexpr int kMaxFan = 32;
  std::vector<MedialSphere> out;
  const double phi = std::acos(std::clamp(na.dot(nb), -1.0, 1.0));
  if (!(phi > 1e-6) || phi > M_PI - 1e-6) return out;
  const double s_phi = std::sin(phi);
  auto normal_at = [&](double t) { return Vec3((std::sin((1.0 - t) * phi) * na + std::sin(t * phi) * nb) / s_phi); };

  const MedialSphere mid = sphere_shrink(surface, p, normal_at(0.5), shrink);
  if (!(mid.radius > 0.0)) return out;
  const double half = std::acos(std::clamp(1.0 - max_bulge / mid.radius, -1.0, 1.0));
  const int k = std::clamp(static_cast<int>(std::ceil(phi / (2.0 * std::max(half, 1e-9)))), 2, kMaxFan);
  // Every member touches the edge at p, so along the edge line their power
  // distances tie. Pulling the outer members off the edge by up to the shrink
  // tolerance hands the edge line to the middle member.
  for (int i = 0; i <= k; ++i) {
    const double t = static_cast<double>(i) / k;
    MedialSphere m = 2 * i == k ? mid : sphere_shrink(surface, p, normal_at(t), shrink);
    m.radius -= shrink.epsilon * std::abs(2.0 * t - 1.0);
    if (m.center.allFinite() && m.radius > 0.0) out.push_back(std::move(m));
  }
  return out;
}

std::vector<MedialSphere> preserve_external_features(const TetMesh& mesh, const SphereSet& spheres,
                                                     const std::vector<FeatureSegment>& segments,
                                                     const std::vector<SurfaceSample>& samples,
                                                     const SurfaceIndex& surface, const FeatureParams& params,
                                                     FeatureMemory& memory) {
  Batch batch(spheres);
  const double tol = 1e-6 * mesh.bbox_diag;
  const double max_bulge = 0.5e-2 * params.delta_eps * mesh.bbox_diag;

  for (Index c : mesh.corners) {
    const Vec3& p = mesh.vertices[c];
    const Index owner = power_nearest_sphere(spheres, p);
    if (owner != kInvalidIndex && spheres[owner].is_feature() && (spheres[owner].center - p).norm() <= tol) continue;
    batch.push(make_feature_sphere(mesh, p, SphereKind::kCorner));
  }

  const FeatureCoverage cov = feature_coverage(segments, spheres);
  for (Index k : cov.uncovered) batch.push(make_feature_sphere(mesh, segments[k].midpoint, SphereKind::kFeatureEdge));

  for (const SurfaceSample& s : samples) {
    if (s.kind != SampleKind::kFeatureEdge || mesh.feature_edges[s.source].kind != FeatureKind::kConvex) continue;
    const Index owner = power_nearest_sphere(spheres, s.position);
    if (owner != kInvalidIndex && spheres[owner].is_feature()) continue;
    batch.push(make_feature_sphere(mesh, s.position, SphereKind::kFeatureEdge));
  }

  for (std::size_t k = 0; k < segments.size(); ++k) {
    const FeatureSegment& seg = segments[k];
    if (seg.kind != FeatureKind::kConcave || memory.concave_seeded.count(k)) continue;
    memory.concave_seeded.insert(k);
    const FeatureEdge& fe = mesh.feature_edges[seg.edge];
    const Index se = find_surface_edge(mesh, fe.v0, fe.v1);
    if (se == kInvalidIndex) continue;
    const auto& tris = mesh.surface_edge_tris[se];
    for (MedialSphere& m : concave_fan_spheres(surface, seg.midpoint, mesh.surface_tris[tris[0]].normal,
                                               mesh.surface_tris[tris[1]].normal, max_bulge, params.shrink))
      batch.push(std::move(m));
  }
  return batch.take();
}

std::vector<int> surface_regions(const TetMesh& mesh, double angle_deg) {
  const double cos_limit = std::cos(angle_deg * M_PI / 180.0);
  const std::size_t n = mesh.surface_tris.size();
  UnionFind uf(n);
  for (const auto& tris : mesh.surface_edge_tris) {
    const Vec3& n0 = mesh.surface_tris[tris[0]].normal;
    const Vec3& n1 = mesh.surface_tris[tris[1]].normal;
    if (n0.dot(n1) > cos_limit) uf.unite(tris[0], tris[1]);
  }
  std::vector<int> root_label(n, -1);
  std::vector<int> out(n);
  int count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const int r = uf.find(static_cast<int>(t));
    if (root_label[r] < 0) root_label[r] = count++;
    out[t] = root_label[r];
  }
  return out;
}

std::vector<int> region_signature(const RestrictedElements& R, const std::vector<int>& regions, double min_fraction) {
  std::map<int, double> area;
  double total = 0.0;
  for (const SurfaceFacet& f : R.surface) {
    area[regions[f.surface_tri]] += f.area;
    total += f.area;
  }
  std::vector<int> sig;
  for (const auto& [r, a] : area)
    if (a >= min_fraction * total && a > 0.0) sig.push_back(r);
  return sig;
}

SheetRelation check_internal_feature_pair(const std::vector<int>& sig_i, const std::vector<int>& sig_j) {
  if (sig_i.empty() || sig_j.empty()) return SheetRelation::kSameSheet;
  return sig_i == sig_j ? SheetRelation::kSameSheet : SheetRelation::kCrossSheet;
}

std::vector<TangentPoint> tangent_planes(const MedialSphere& m, double angle_deg) {
  const double cos_limit = std::cos(angle_deg * M_PI / 180.0);
  std::vector<TangentPoint> out;
  for (const TangentPoint& t : m.tangents) {
    if (!(t.normal.squaredNorm() > 0.0)) continue;
    bool merged = false;
    for (const TangentPoint& o : out)
      if (o.normal.dot(t.normal) > cos_limit) merged = true;
    if (!merged) out.push_back(t);
  }
  return out;
}

namespace {

std::vector<TangentPoint> merge_planes(std::vector<TangentPoint> a, const std::vector<TangentPoint>& b,
                                       double angle_deg) {
  const double cos_limit = std::cos(angle_deg * M_PI / 180.0);
  for (const TangentPoint& t : b) {
    bool merged = false;
    for (const TangentPoint& o : a)
      if (o.normal.dot(t.normal) > cos_limit) merged = true;
    if (!merged) a.push_back(t);
  }
  return a;
}

// Interior sphere touching but not crossing the surface.
bool valid_seam_sphere(const MedialSphere& m, const SurfaceIndex& surface, double tol) {
  if (!m.center.allFinite() || !(m.radius > 0.0)) return false;
  const SurfaceIndex::Hit hit = surface.nearest(m.center);
  if ((m.center - hit.point).dot(hit.normal) > 0.0) return false;
  return std::abs(hit.distance - m.radius) <= tol;
}

}  // namespace

std::vector<MedialSphere> preserve_internal_features(const TetMesh& mesh, const MedialMesh& mm,
                                                     const std::vector<RestrictedElements>& elements,
                                                     const SphereSet& spheres, const SurfaceIndex& surface,
                                                     const FeatureParams& params, FeatureMemory& memory) {
  Batch batch(spheres);
  const std::vector<int> regions = surface_regions(mesh, params.sheet_angle_deg);
  std::map<Index, std::vector<int>> signatures;
  auto signature = [&](Index s) -> const std::vector<int>& {
    auto it = signatures.find(s);
    if (it == signatures.end())
      it = signatures.emplace(s, region_signature(elements[s], regions, params.min_region_fraction)).first;
    return it->second;
  };

  std::vector<std::size_t> order(mm.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double tol = 1e-3 * mesh.bbox_diag;
  for (std::size_t k : order) {
    const auto [i, j] = std::make_pair(mm.edges[k][0], mm.edges[k][1]);
    const MedialSphere& mi = spheres[i];
    const MedialSphere& mj = spheres[j];
    if (mi.is_feature() || mj.is_feature()) continue;
    if (memory.pairs_tried.count({i, j})) continue;
    if (check_internal_feature_pair(signature(i), signature(j)) != SheetRelation::kCrossSheet) continue;
    memory.pairs_tried.insert({i, j});

    const auto planes = merge_planes(tangent_planes(mi, params.sheet_angle_deg),
                                     tangent_planes(mj, params.sheet_angle_deg), params.sheet_angle_deg);
    MedialSphere init;
    init.center = 0.5 * (mi.center + mj.center);
    init.radius = 0.5 * (mi.radius + mj.radius);
    if (planes.size() < 3) continue;
    try {
      MedialSphere m = optimize_tn_sphere(planes, init);
      if (valid_seam_sphere(m, surface, tol)) batch.push(std::move(m));
    } catch (const Error&) {
    }
  }
  return batch.take();
}

void export_feature_curves(const std::string& external_path, const std::string& internal_path,
                           const TetMesh& mesh, const MedialMesh& mm, const SphereSet& spheres) {
  const Normalization& nz = mesh.normalization;
  std::vector<std::vector<Vec3>> external;
  for (const FeatureLine& line : mesh.feature_lines) {
    std::vector<Vec3> pts;
    for (Index v : line.verts) pts.push_back(nz.to_original(mesh.vertices[v]));
    external.push_back(std::move(pts));
  }
  std::vector<std::vector<Vec3>> internal;
  for (const auto& e : mm.edges) {
    const MedialSphere& a = spheres[e[0]];
    const MedialSphere& b = spheres[e[1]];
    if (a.kind == SphereKind::kTN && b.kind == SphereKind::kTN)
      internal.push_back({nz.to_original(a.center), nz.to_original(b.center)});
  }
  write_obj_polylines(external_path, external);
  write_obj_polylines(internal_path, internal);
}

}  // namespace mattopo
