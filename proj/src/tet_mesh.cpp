#include "mattopo/tet_mesh.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mattopo/geom.h"

namespace mattopo {

namespace {

constexpr double kPi = 3.14159265358979323846;

template <std::size_t N>
std::array<Index, N> sorted(std::array<Index, N> a) {
  std::sort(a.begin(), a.end());
  return a;
}

[[noreturn]] void fail(const std::string& what) { throw Error("mesh_core", what); }

}  // namespace

double TetMesh::tet_volume(Index t) const {
  const auto& T = tets[t];
  return signed_tet_volume(vertices[T[0]], vertices[T[1]], vertices[T[2]], vertices[T[3]]);
}

double TetMesh::total_volume() const {
  double v = 0.0;
  for (Index t = 0; t < static_cast<Index>(tets.size()); ++t) v += tet_volume(t);
  return v;
}

Aabb TetMesh::tet_box(Index t) const {
  Aabb b;
  for (Index v : tets[t]) b.extend(vertices[v]);
  return b;
}

Vec3 TetMesh::surface_vertex_normal(Index v) const {
  Vec3 n = Vec3::Zero();
  for (Index s : vertex_surface_tris[v]) n += surface_tris[s].area * surface_tris[s].normal;
  const double l = n.norm();
  return l > 0 ? Vec3(n / l) : n;
}

TetMesh build_tet_mesh(std::vector<Vec3> vertices, std::vector<std::array<Index, 4>> tets,
                       bool normalize) {
  if (tets.empty()) fail("mesh has no tetrahedra");
  const Index nv = static_cast<Index>(vertices.size());
  for (const auto& t : tets)
    for (Index v : t)
      if (v < 0 || v >= nv) fail("tet references vertex out of range");

  TetMesh mesh;
  Aabb box;
  for (const Vec3& p : vertices) box.extend(p);
  if (normalize) {
    const double extent = box.extent().maxCoeff();
    if (!(extent > 0)) fail("degenerate bounding box");
    mesh.normalization.offset = box.lo;
    mesh.normalization.scale = 1000.0 / extent;
    for (Vec3& p : vertices) p = (p - box.lo) * mesh.normalization.scale;
  }
  mesh.vertices = std::move(vertices);
  mesh.tets = std::move(tets);

  // Orientation: all-negative inputs use the opposite convention and are
  // flipped wholesale; mixed orientations are rejected.
  std::vector<Index> inverted;
  for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t)
    if (!(mesh.tet_volume(t) > 0)) inverted.push_back(t);
  if (!inverted.empty()) {
    bool all_negative = inverted.size() == mesh.tets.size();
    if (all_negative)
      for (Index t : inverted) all_negative = all_negative && mesh.tet_volume(t) < 0;
    if (all_negative) {
      spdlog::info("mesh_core: all tets negatively oriented, flipping convention");
      for (auto& t : mesh.tets) std::swap(t[2], t[3]);
    } else {
      std::ostringstream os;
      os << "inverted tets (" << inverted.size() << "):";
      for (std::size_t k = 0; k < std::min<std::size_t>(inverted.size(), 16); ++k) os << ' ' << inverted[k];
      fail(os.str());
    }
  }

  const Index nt = static_cast<Index>(mesh.tets.size());

  {
    std::vector<std::array<Index, 4>> keys(nt);
    for (Index t = 0; t < nt; ++t) keys[t] = sorted(mesh.tets[t]);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      fail("non-manifold boundary (duplicated tet)");
  }

  // Faces.
  struct FaceRec {
    std::array<Index, 3> key;
    Index tet;
    int local;
  };
  std::vector<FaceRec> frec;
  frec.reserve(4 * nt);
  for (Index t = 0; t < nt; ++t)
    for (int k = 0; k < 4; ++k) {
      const auto& fv = kTetFaceVerts[k];
      frec.push_back({sorted(std::array<Index, 3>{mesh.tets[t][fv[0]], mesh.tets[t][fv[1]],
                                                 mesh.tets[t][fv[2]]}),
                      t, k});
    }
  std::sort(frec.begin(), frec.end(), [](const FaceRec& a, const FaceRec& b) {
    return a.key != b.key ? a.key < b.key : (a.tet != b.tet ? a.tet < b.tet : a.local < b.local);
  });
  mesh.tet_faces.assign(nt, {kInvalidIndex, kInvalidIndex, kInvalidIndex, kInvalidIndex});
  for (std::size_t i = 0; i < frec.size();) {
    std::size_t j = i;
    while (j < frec.size() && frec[j].key == frec[i].key) ++j;
    if (j - i > 2) fail("non-manifold boundary (face shared by more than two tets)");
    const Index f = static_cast<Index>(mesh.faces.size());
    mesh.faces.push_back(frec[i].key);
    mesh.face_tets.push_back({frec[i].tet, j - i == 2 ? frec[i + 1].tet : kInvalidIndex});
    for (std::size_t k = i; k < j; ++k) mesh.tet_faces[frec[k].tet][frec[k].local] = f;
    i = j;
  }

  // Edges.
  struct EdgeRec {
    std::array<Index, 2> key;
    Index tet;
    int local;
  };
  std::vector<EdgeRec> erec;
  erec.reserve(6 * nt);
  for (Index t = 0; t < nt; ++t)
    for (int e = 0; e < 6; ++e)
      erec.push_back({sorted(std::array<Index, 2>{mesh.tets[t][kTetEdgeVerts[e][0]],
                                                 mesh.tets[t][kTetEdgeVerts[e][1]]}),
                      t, e});
  std::sort(erec.begin(), erec.end(), [](const EdgeRec& a, const EdgeRec& b) {
    return a.key != b.key ? a.key < b.key : (a.tet != b.tet ? a.tet < b.tet : a.local < b.local);
  });
  mesh.tet_edges.assign(nt, {});
  for (std::size_t i = 0; i < erec.size();) {
    std::size_t j = i;
    while (j < erec.size() && erec[j].key == erec[i].key) ++j;
    const Index e = static_cast<Index>(mesh.edges.size());
    mesh.edges.push_back(erec[i].key);
    mesh.edge_valence.push_back(static_cast<int>(j - i));
    for (std::size_t k = i; k < j; ++k) mesh.tet_edges[erec[k].tet][erec[k].local] = e;
    i = j;
  }

  mesh.vertex_valence.assign(mesh.vertices.size(), 0);
  for (const auto& t : mesh.tets)
    for (Index v : t) ++mesh.vertex_valence[v];

  // Boundary surface.
  mesh.face_surface.assign(mesh.faces.size(), kInvalidIndex);
  for (Index f = 0; f < static_cast<Index>(mesh.faces.size()); ++f) {
    if (!mesh.is_boundary_face(f)) continue;
    const Index t = mesh.face_tets[f][0];
    int local = 0;
    while (mesh.tet_faces[t][local] != f) ++local;
    SurfaceTri s;
    for (int k = 0; k < 3; ++k) s.v[k] = mesh.tets[t][kTetFaceVerts[local][k]];
    s.tet = t;
    s.local_face = local;
    s.face = f;
    const Vec3 an = triangle_area_vector(mesh.vertices[s.v[0]], mesh.vertices[s.v[1]],
                                         mesh.vertices[s.v[2]]);
    s.area = an.norm();
    s.normal = s.area > 0 ? Vec3(an / s.area) : Vec3::Zero();
    mesh.face_surface[f] = static_cast<Index>(mesh.surface_tris.size());
    mesh.surface_tris.push_back(s);
  }
  if (mesh.surface_tris.empty()) fail("non-manifold boundary (no boundary surface)");

  struct SEdgeRec {
    std::array<Index, 2> key;
    Index tri;
  };
  std::vector<SEdgeRec> srec;
  for (Index s = 0; s < static_cast<Index>(mesh.surface_tris.size()); ++s)
    for (int k = 0; k < 3; ++k)
      srec.push_back({sorted(std::array<Index, 2>{mesh.surface_tris[s].v[k],
                                                 mesh.surface_tris[s].v[(k + 1) % 3]}),
                      s});
  std::sort(srec.begin(), srec.end(), [](const SEdgeRec& a, const SEdgeRec& b) {
    return a.key != b.key ? a.key < b.key : a.tri < b.tri;
  });
  for (std::size_t i = 0; i < srec.size();) {
    std::size_t j = i;
    while (j < srec.size() && srec[j].key == srec[i].key) ++j;
    if (j - i != 2) fail("non-manifold boundary (surface edge with " + std::to_string(j - i) + " triangles)");
    mesh.surface_edges.push_back(srec[i].key);
    mesh.surface_edge_tris.push_back({srec[i].tri, srec[i + 1].tri});
    i = j;
  }
  mesh.vertex_surface_tris.assign(mesh.vertices.size(), {});
  for (Index s = 0; s < static_cast<Index>(mesh.surface_tris.size()); ++s)
    for (Index v : mesh.surface_tris[s].v) mesh.vertex_surface_tris[v].push_back(s);

  mesh.bbox = Aabb();
  for (const Vec3& p : mesh.vertices) mesh.bbox.extend(p);
  mesh.bbox_diag = mesh.bbox.diagonal();
  return mesh;
}

FeatureKind classify_surface_edge(const TetMesh& mesh, Index se) {
  const auto& e = mesh.surface_edges[se];
  const SurfaceTri& t0 = mesh.surface_tris[mesh.surface_edge_tris[se][0]];
  const SurfaceTri& t1 = mesh.surface_tris[mesh.surface_edge_tris[se][1]];
  Index opp = kInvalidIndex;
  for (Index v : t1.v)
    if (v != e[0] && v != e[1]) opp = v;
  const double side = (mesh.vertices[opp] - mesh.vertices[e[0]]).dot(t0.normal);
  return side < 0 ? FeatureKind::kConvex : FeatureKind::kConcave;
}

void detect_features(TetMesh& mesh, double angle_threshold_deg) {
  if (!(angle_threshold_deg > 0 && angle_threshold_deg < 180))
    fail("angle threshold must lie in (0, 180)");
  const double cos_thr = std::cos(angle_threshold_deg * kPi / 180.0);
  mesh.feature_edges.clear();
  mesh.corners.clear();
  for (Index se = 0; se < static_cast<Index>(mesh.surface_edges.size()); ++se) {
    const Vec3& n0 = mesh.surface_tris[mesh.surface_edge_tris[se][0]].normal;
    const Vec3& n1 = mesh.surface_tris[mesh.surface_edge_tris[se][1]].normal;
    if (n0.dot(n1) < cos_thr) {
      FeatureEdge fe;
      fe.v0 = mesh.surface_edges[se][0];
      fe.v1 = mesh.surface_edges[se][1];
      fe.kind = classify_surface_edge(mesh, se);
      mesh.feature_edges.push_back(fe);
    }
  }

  std::vector<std::vector<Index>> incident(mesh.vertices.size());
  for (Index f = 0; f < static_cast<Index>(mesh.feature_edges.size()); ++f) {
    incident[mesh.feature_edges[f].v0].push_back(f);
    incident[mesh.feature_edges[f].v1].push_back(f);
  }
  for (Index v = 0; v < static_cast<Index>(mesh.vertices.size()); ++v) {
    const auto& inc = incident[v];
    if (inc.size() >= 3) {
      mesh.corners.push_back(v);
    } else if (inc.size() == 2) {
      auto other = [&](Index f) {
        return mesh.feature_edges[f].v0 == v ? mesh.feature_edges[f].v1 : mesh.feature_edges[f].v0;
      };
      const Vec3 d0 = (mesh.vertices[v] - mesh.vertices[other(inc[0])]).normalized();
      const Vec3 d1 = (mesh.vertices[other(inc[1])] - mesh.vertices[v]).normalized();
      if (d0.dot(d1) < cos_thr) mesh.corners.push_back(v);
    }
  }
  build_feature_lines(mesh);
}

void set_features(TetMesh& mesh, const std::vector<std::array<Index, 2>>& sharp_edges,
                  const std::vector<Index>& corners) {
  mesh.feature_edges.clear();
  for (const auto& e : sharp_edges) {
    const auto key = sorted(e);
    const auto it = std::lower_bound(mesh.surface_edges.begin(), mesh.surface_edges.end(), key);
    if (it == mesh.surface_edges.end() || *it != key)
      fail("feature edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) + " is not a surface edge");
    FeatureEdge fe;
    fe.v0 = key[0];
    fe.v1 = key[1];
    fe.kind = classify_surface_edge(mesh, static_cast<Index>(it - mesh.surface_edges.begin()));
    mesh.feature_edges.push_back(fe);
  }
  for (Index c : corners)
    if (c < 0 || c >= static_cast<Index>(mesh.vertices.size()) || mesh.vertex_surface_tris[c].empty())
      fail("corner " + std::to_string(c) + " is not a surface vertex");
  mesh.corners = corners;
  std::sort(mesh.corners.begin(), mesh.corners.end());
  mesh.corners.erase(std::unique(mesh.corners.begin(), mesh.corners.end()), mesh.corners.end());
  build_feature_lines(mesh);
}

void build_feature_lines(TetMesh& mesh) {
  mesh.feature_lines.clear();
  const Index nf = static_cast<Index>(mesh.feature_edges.size());
  std::vector<std::vector<Index>> incident(mesh.vertices.size());
  for (Index f = 0; f < nf; ++f) {
    incident[mesh.feature_edges[f].v0].push_back(f);
    incident[mesh.feature_edges[f].v1].push_back(f);
  }
  std::vector<char> is_corner(mesh.vertices.size(), 0);
  for (Index c : mesh.corners) is_corner[c] = 1;
  auto is_break = [&](Index v) { return is_corner[v] || incident[v].size() != 2; };
  std::vector<char> used(nf, 0);

  auto walk = [&](Index start_vertex, Index first_edge) {
    FeatureLine line;
    line.kind = mesh.feature_edges[first_edge].kind;
    line.verts.push_back(start_vertex);
    Index v = start_vertex;
    Index f = first_edge;
    while (true) {
      used[f] = 1;
      line.edges.push_back(f);
      const FeatureEdge& fe = mesh.feature_edges[f];
      v = fe.v0 == v ? fe.v1 : fe.v0;
      line.verts.push_back(v);
      if (v == start_vertex) {
        line.closed = true;
        break;
      }
      if (is_break(v)) break;
      Index next = kInvalidIndex;
      for (Index g : incident[v])
        if (!used[g]) next = g;
      if (next == kInvalidIndex) break;
      f = next;
    }
    mesh.feature_lines.push_back(std::move(line));
  };

  for (Index v = 0; v < static_cast<Index>(mesh.vertices.size()); ++v) {
    if (!is_break(v)) continue;
    for (Index f : incident[v])
      if (!used[f]) walk(v, f);
  }
  // Remaining edges form closed loops without corners.
  for (Index f = 0; f < nf; ++f)
    if (!used[f]) walk(std::min(mesh.feature_edges[f].v0, mesh.feature_edges[f].v1), f);
}

std::vector<SurfaceSample> sample_surface(const TetMesh& mesh, double density, std::uint64_t seed) {
  if (!(density > 0)) fail("sample density must be positive");
  std::vector<SurfaceSample> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Index s = 0; s < static_cast<Index>(mesh.surface_tris.size()); ++s) {
    const SurfaceTri& tri = mesh.surface_tris[s];
    std::poisson_distribution<long> pois(density * tri.area);
    const long n = tri.area > 0 ? pois(rng) : 0;
    const Vec3& a = mesh.vertices[tri.v[0]];
    const Vec3& b = mesh.vertices[tri.v[1]];
    const Vec3& c = mesh.vertices[tri.v[2]];
    for (long k = 0; k < n; ++k) {
      const double r1 = std::sqrt(uni(rng));
      const double r2 = uni(rng);
      SurfaceSample smp;
      smp.position = (1 - r1) * a + r1 * (1 - r2) * b + r1 * r2 * c;
      smp.normal = tri.normal;
      smp.kind = SampleKind::kSurface;
      smp.source = s;
      out.push_back(smp);
    }
  }

  // Feature lines: uniform in arc length with the linear density implied by
  // the areal one.
  const double spacing = 1.0 / std::sqrt(density);
  std::map<std::array<Index, 2>, Index> edge_lookup;
  for (Index se = 0; se < static_cast<Index>(mesh.surface_edges.size()); ++se)
    edge_lookup.emplace(mesh.surface_edges[se], se);
  auto edge_normal = [&](const FeatureEdge& fe) {
    const Index se = edge_lookup.at(sorted(std::array<Index, 2>{fe.v0, fe.v1}));
    const Vec3 n = mesh.surface_tris[mesh.surface_edge_tris[se][0]].normal +
                   mesh.surface_tris[mesh.surface_edge_tris[se][1]].normal;
    return Vec3(n.normalized());
  };
  for (const FeatureLine& line : mesh.feature_lines) {
    std::vector<double> cum{0.0};
    for (std::size_t k = 0; k + 1 < line.verts.size(); ++k)
      cum.push_back(cum.back() + (mesh.vertices[line.verts[k + 1]] - mesh.vertices[line.verts[k]]).norm());
    const double length = cum.back();
    if (!(length > 0)) continue;
    const long n = std::max<long>(1, static_cast<long>(std::ceil(length / spacing)));
    std::size_t seg = 0;
    for (long k = 0; k < n; ++k) {
      const double s = (k + 0.5) * length / n;
      while (seg + 2 < cum.size() && cum[seg + 1] < s) ++seg;
      const double l = cum[seg + 1] - cum[seg];
      const double t = l > 0 ? (s - cum[seg]) / l : 0.0;
      SurfaceSample smp;
      smp.position = (1 - t) * mesh.vertices[line.verts[seg]] + t * mesh.vertices[line.verts[seg + 1]];
      smp.normal = edge_normal(mesh.feature_edges[line.edges[seg]]);
      smp.kind = SampleKind::kFeatureEdge;
      smp.source = line.edges[seg];
      out.push_back(smp);
    }
  }
  for (Index c : mesh.corners) {
    SurfaceSample smp;
    smp.position = mesh.vertices[c];
    smp.normal = mesh.surface_vertex_normal(c);
    smp.kind = SampleKind::kCorner;
    smp.source = c;
    out.push_back(smp);
  }
  return out;
}

int mesh_euler(const TetMesh& mesh) {
  int used = 0;
  for (int val : mesh.vertex_valence) used += val > 0 ? 1 : 0;
  return used - static_cast<int>(mesh.edges.size()) + static_cast<int>(mesh.faces.size()) -
         static_cast<int>(mesh.tets.size());
}

int surface_euler(const TetMesh& mesh) {
  int nv = 0;
  for (const auto& tris : mesh.vertex_surface_tris) nv += tris.empty() ? 0 : 1;
  return nv - static_cast<int>(mesh.surface_edges.size()) + static_cast<int>(mesh.surface_tris.size());
}

SurfaceIndex::SurfaceIndex(const TetMesh& mesh) : vertices_(mesh.vertices) {
  tris_.reserve(mesh.surface_tris.size());
  for (const SurfaceTri& s : mesh.surface_tris) tris_.push_back(s.v);
  init();
}

SurfaceIndex::SurfaceIndex(std::vector<Vec3> vertices, std::vector<std::array<Index, 3>> tris)
    : vertices_(std::move(vertices)), tris_(std::move(tris)) {
  init();
}

void SurfaceIndex::init() {
  std::vector<Aabb> boxes;
  boxes.reserve(tris_.size());
  normals_.reserve(tris_.size());
  for (const auto& t : tris_) {
    const Vec3 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    boxes.push_back(triangle_box(a, b, c));
    const Vec3 n = (b - a).cross(c - a);
    const double l = n.norm();
    normals_.push_back(l > 0 ? Vec3(n / l) : Vec3::Zero());
  }
  bvh_.build(std::move(boxes));
}

SurfaceIndex::Hit SurfaceIndex::nearest(const Vec3& p) const {
  Hit hit;
  Vec3 best_point = p;
  const auto [tri, d2] = bvh_.nearest(p, [&](Index t, double) {
    const auto& T = tris_[t];
    const Vec3 q = closest_point_on_triangle(p, vertices_[T[0]], vertices_[T[1]], vertices_[T[2]]);
    const double d = (q - p).squaredNorm();
    return d;
  });
  if (tri == kInvalidIndex) return hit;
  const auto& T = tris_[tri];
  best_point = closest_point_on_triangle(p, vertices_[T[0]], vertices_[T[1]], vertices_[T[2]]);
  hit.point = best_point;
  hit.tri = tri;
  hit.normal = normals_[tri];
  hit.distance = std::sqrt(d2);
  return hit;
}

}  // namespace mattopo
