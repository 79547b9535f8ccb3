#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "mattopo/common.h"
#include "mattopo/rational.h"

namespace mattopo {

/// Half-space n.x + d > 0 with |n| = 1. Non-negative tags name the sphere on
/// the other side of a radical plane; tet faces use tag -1 - local_face.
struct CellPlane {
  Vec3 n = Vec3::Zero();
  double d = 0.0;
  Index tag = kInvalidIndex;

  double eval(const Vec3& x) const { return n.dot(x) + d; }
  bool is_tet_face() const { return tag < 0; }
  int tet_face() const { return -1 - tag; }
  static Index face_tag(int local_face) { return -1 - local_face; }
};

/// A cell vertex is the intersection of three planes (indices into the
/// cell's plane list). The cyclic order encodes orientation.
struct CellVertex {
  std::array<std::uint16_t, 3> p{};
  Vec3 pos = Vec3::Zero();
  Rational payload;

  bool has(int plane) const { return p[0] == plane || p[1] == plane || p[2] == plane; }
};

struct CellEdge {
  std::uint16_t a = 0;  // a < b
  std::uint16_t b = 0;
  Rational payload;
};

enum class ClipOutcome { kUnchanged, kClipped, kEmpty };

/// Convex polytope in dual form (planes + vertex triplets) carrying
/// fractional Euler payloads on its vertices, edges and facets.
class ConvexCell {
 public:
  ConvexCell() = default;

  /// Tet (positively oriented) with per-element payloads. Edge payloads follow
  /// kTetEdgeVerts order; face payload k belongs to the face opposite vertex k.
  static ConvexCell from_tet(const std::array<Vec3, 4>& corners, const std::array<Rational, 4>& vertex_payload,
                             const std::array<Rational, 6>& edge_payload,
                             const std::array<Rational, 4>& face_payload);

  /// Unit payloads everywhere.
  static ConvexCell from_tet(const std::array<Vec3, 4>& corners);

  /// Clips by `plane`. `inside(v)` classifies a vertex; `position(a, b, P,
  /// v_in, v_out)` places the vertex created on edge {a, b} (with v_in kept
  /// and v_out removed). New vertices inherit the payload of the edge they
  /// split, new edges the payload of the facet they split, and the new facet
  /// the cell payload (1).
  template <class InsideFn, class PositionFn>
  ClipOutcome clip(const CellPlane& plane, InsideFn&& inside, PositionFn&& position);

  /// Geometric clip: closed half-space test and three-plane intersection.
  ClipOutcome clip(const CellPlane& plane);

  bool empty() const { return verts_.empty(); }
  const std::vector<CellPlane>& planes() const { return planes_; }
  const std::vector<CellVertex>& vertices() const { return verts_; }
  const std::vector<CellEdge>& edges() const { return edges_; }
  const Rational& facet_payload(int plane) const { return facet_payload_[plane]; }
  Rational edge_payload(int a, int b) const;
  bool plane_used(int plane) const;

  /// Sum of signed payloads: V - E + F - 1.
  Rational euler() const;

  /// Vertex indices of each facet in cyclic order (empty for unused planes).
  std::vector<std::vector<int>> facet_polygons() const;
  double volume() const;
  double facet_area(const std::vector<int>& polygon) const;
  Vec3 centroid() const;

  /// Intersection of three cell planes; falls back to `fallback` when the
  /// system is singular.
  Vec3 intersect(int a, int b, int c, const Vec3& fallback) const;

 private:
  int find_edge(int a, int b) const;

  std::vector<CellPlane> planes_;
  std::vector<Rational> facet_payload_;
  std::vector<CellVertex> verts_;
  std::vector<CellEdge> edges_;
};

template <class InsideFn, class PositionFn>
ClipOutcome ConvexCell::clip(const CellPlane& plane, InsideFn&& inside, PositionFn&& position) {
  if (verts_.empty()) return ClipOutcome::kEmpty;
  const int n = static_cast<int>(verts_.size());
  std::vector<char> keep(n);
  int kept = 0;
  for (int i = 0; i < n; ++i) {
    keep[i] = inside(verts_[i]) ? 1 : 0;
    kept += keep[i];
  }
  if (kept == n) return ClipOutcome::kUnchanged;
  if (kept == 0) {
    verts_.clear();
    edges_.clear();
    return ClipOutcome::kEmpty;
  }

  const int P = static_cast<int>(planes_.size());
  planes_.push_back(plane);
  facet_payload_.push_back(Rational(1));

  std::vector<CellVertex> next;
  next.reserve(n + 4);
  for (int i = 0; i < n; ++i)
    if (keep[i]) next.push_back(verts_[i]);

  std::vector<std::uint16_t> touched;  // planes adjacent to the new facet
  for (int i = 0; i < n; ++i) {
    if (keep[i]) continue;
    const CellVertex& t = verts_[i];
    for (int e = 0; e < 3; ++e) {
      const int a = t.p[e];
      const int b = t.p[(e + 1) % 3];
      // Twin vertex holds the directed edge (b, a).
      int twin = -1;
      for (int j = 0; j < n && twin < 0; ++j) {
        const auto& q = verts_[j].p;
        for (int f = 0; f < 3; ++f)
          if (q[f] == b && q[(f + 1) % 3] == a) {
            twin = j;
            break;
          }
      }
      if (twin < 0 || !keep[twin]) continue;
      CellVertex v;
      v.p = {static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b), static_cast<std::uint16_t>(P)};
      v.payload = edge_payload(a, b);
      v.pos = position(a, b, P, verts_[twin], t);
      next.push_back(v);
      touched.push_back(static_cast<std::uint16_t>(a));
      touched.push_back(static_cast<std::uint16_t>(b));
    }
  }

  std::vector<CellEdge> edges;
  edges.reserve(edges_.size() + touched.size() / 2);
  for (const CellEdge& e : edges_) {
    bool alive = false;
    for (const CellVertex& v : next)
      if (v.has(e.a) && v.has(e.b)) {
        alive = true;
        break;
      }
    if (alive) edges.push_back(e);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (std::uint16_t a : touched) {
    CellEdge e;
    e.a = a;
    e.b = static_cast<std::uint16_t>(P);
    e.payload = facet_payload_[a];
    edges.push_back(e);
  }
  verts_ = std::move(next);
  edges_ = std::move(edges);
  return ClipOutcome::kClipped;
}

}  // namespace mattopo
