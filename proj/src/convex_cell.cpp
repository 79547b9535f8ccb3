#include "mattopo/convex_cell.h"

#include <cmath>
#include <map>

#include <Eigen/LU>

#include "mattopo/tet_mesh.h"

namespace mattopo {

ConvexCell ConvexCell::from_tet(const std::array<Vec3, 4>& corners, const std::array<Rational, 4>& vertex_payload,
                                const std::array<Rational, 6>& edge_payload,
                                const std::array<Rational, 4>& face_payload) {
  ConvexCell cell;
  for (int k = 0; k < 4; ++k) {
    const auto& f = kTetFaceVerts[k];
    const Vec3 outward = (corners[f[1]] - corners[f[0]]).cross(corners[f[2]] - corners[f[0]]);
    CellPlane pl;
    pl.n = -outward.normalized();
    pl.d = -pl.n.dot(corners[f[0]]);
    pl.tag = CellPlane::face_tag(k);
    cell.planes_.push_back(pl);
    cell.facet_payload_.push_back(face_payload[k]);
  }
  // The vertex opposite face k is where the three other faces meet; the same
  // index table lists them with a consistent orientation.
  for (int k = 0; k < 4; ++k) {
    CellVertex v;
    for (int j = 0; j < 3; ++j) v.p[j] = static_cast<std::uint16_t>(kTetFaceVerts[k][j]);
    v.pos = corners[k];
    v.payload = vertex_payload[k];
    cell.verts_.push_back(v);
  }
  // Faces a and b meet along the tet edge joining the two other vertices.
  for (int e = 0; e < 6; ++e) {
    const int c = kTetEdgeVerts[e][0];
    const int d = kTetEdgeVerts[e][1];
    std::array<int, 2> faces{};
    int m = 0;
    for (int k = 0; k < 4; ++k)
      if (k != c && k != d) faces[m++] = k;
    CellEdge edge;
    edge.a = static_cast<std::uint16_t>(faces[0]);
    edge.b = static_cast<std::uint16_t>(faces[1]);
    edge.payload = edge_payload[e];
    cell.edges_.push_back(edge);
  }
  return cell;
}

ConvexCell ConvexCell::from_tet(const std::array<Vec3, 4>& corners) {
  const Rational one(1);
  return from_tet(corners, {one, one, one, one}, {one, one, one, one, one, one}, {one, one, one, one});
}

Vec3 ConvexCell::intersect(int a, int b, int c, const Vec3& fallback) const {
  Eigen::Matrix3d m;
  Vec3 rhs;
  const int ids[3] = {a, b, c};
  for (int k = 0; k < 3; ++k) {
    m.row(k) = planes_[ids[k]].n.transpose();
    rhs[k] = -planes_[ids[k]].d;
  }
  const double det = m.determinant();
  if (std::abs(det) < 1e-12) return fallback;
  const Vec3 x = m.partialPivLu().solve(rhs);
  return x.allFinite() ? x : fallback;
}

ClipOutcome ConvexCell::clip(const CellPlane& plane) {
  return clip(
      plane, [&](const CellVertex& v) { return plane.eval(v.pos) >= 0.0; },
      [&](int a, int b, int P, const CellVertex& vin, const CellVertex& vout) {
        const double di = plane.eval(vin.pos);
        const double dout = plane.eval(vout.pos);
        const double t = di / (di - dout);
        const Vec3 interp = vin.pos + t * (vout.pos - vin.pos);
        return intersect(a, b, P, interp);
      });
}

int ConvexCell::find_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (edges_[i].a == a && edges_[i].b == b) return static_cast<int>(i);
  return -1;
}

Rational ConvexCell::edge_payload(int a, int b) const {
  const int e = find_edge(a, b);
  if (e < 0) throw Error("rpd_engine", "convex cell edge payload missing");
  return edges_[e].payload;
}

bool ConvexCell::plane_used(int plane) const {
  for (const CellVertex& v : verts_)
    if (v.has(plane)) return true;
  return false;
}

Rational ConvexCell::euler() const {
  if (verts_.empty()) return Rational(0);
  Rational s(-1);
  for (const CellVertex& v : verts_) s += v.payload;
  for (const CellEdge& e : edges_) s -= e.payload;
  for (int p = 0; p < static_cast<int>(planes_.size()); ++p)
    if (plane_used(p)) s += facet_payload_[p];
  return s;
}

std::vector<std::vector<int>> ConvexCell::facet_polygons() const {
  std::vector<std::vector<int>> polys(planes_.size());
  if (verts_.empty()) return polys;
  // Around plane p each vertex (p, x, y) links x -> y.
  std::vector<std::map<int, std::pair<int, int>>> links(planes_.size());
  for (int i = 0; i < static_cast<int>(verts_.size()); ++i) {
    const auto& t = verts_[i].p;
    for (int k = 0; k < 3; ++k) links[t[k]][t[(k + 1) % 3]] = {t[(k + 2) % 3], i};
  }
  for (std::size_t p = 0; p < planes_.size(); ++p) {
    const auto& l = links[p];
    if (l.empty()) continue;
    int x = l.begin()->first;
    for (std::size_t guard = 0; guard <= l.size(); ++guard) {
      auto it = l.find(x);
      if (it == l.end()) break;
      polys[p].push_back(it->second.second);
      x = it->second.first;
      if (x == l.begin()->first) break;
    }
  }
  return polys;
}

double ConvexCell::facet_area(const std::vector<int>& polygon) const {
  if (polygon.size() < 3) return 0.0;
  Vec3 s = Vec3::Zero();
  const Vec3& o = verts_[polygon[0]].pos;
  for (std::size_t k = 1; k + 1 < polygon.size(); ++k)
    s += (verts_[polygon[k]].pos - o).cross(verts_[polygon[k + 1]].pos - o);
  return 0.5 * s.norm();
}

Vec3 ConvexCell::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const CellVertex& v : verts_) c += v.pos;
  return verts_.empty() ? c : Vec3(c / static_cast<double>(verts_.size()));
}

double ConvexCell::volume() const {
  if (verts_.empty()) return 0.0;
  const Vec3 ref = centroid();
  const auto polys = facet_polygons();
  double v = 0.0;
  for (std::size_t p = 0; p < polys.size(); ++p) {
    if (polys[p].size() < 3) continue;
    v += planes_[p].eval(ref) * facet_area(polys[p]) / 3.0;
  }
  return v;
}

}  // namespace mattopo
