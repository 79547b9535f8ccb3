#include "mattopo/envelope.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace mattopo {

double sphere_signed_distance(const Vec3& p, const Vec3& c, double r) { return (p - c).norm() - r; }

double cone_signed_distance(const Vec3& p, const Vec3& c0, double r0, const Vec3& c1, double r1) {
  const Vec3 d = c1 - c0;
  const double L2 = d.squaredNorm();
  const double dr = r1 - r0;
  if (L2 <= dr * dr) return std::min(sphere_signed_distance(p, c0, r0), sphere_signed_distance(p, c1, r1));
  const Vec3 v = p - c0;
  const double t0 = v.dot(d) / L2;
  const double h = (v - t0 * d).norm();
  const double L = std::sqrt(L2);
  double t = t0 + h * dr / (L * std::sqrt(L2 - dr * dr));
  t = std::clamp(t, 0.0, 1.0);
  return (v - t * d).norm() - (r0 + t * dr);
}

double slab_signed_distance(const Vec3& p, const Vec3& c0, double r0, const Vec3& c1, double r1, const Vec3& c2,
                            double r2) {
  const double boundary = std::min({cone_signed_distance(p, c0, r0, c1, r1),
                                    cone_signed_distance(p, c1, r1, c2, r2),
                                    cone_signed_distance(p, c2, r2, c0, r0)});
  Eigen::Matrix<double, 3, 2> E;
  E.col(0) = c1 - c0;
  E.col(1) = c2 - c0;
  const Eigen::Matrix2d G = E.transpose() * E;
  const double det = G.determinant();
  if (!(det > 1e-12 * G.trace() * G.trace())) return boundary;
  const Eigen::Matrix2d Gi = G.inverse();
  const Eigen::Vector2d dr(r1 - r0, r2 - r0);
  const double k = dr.dot(Gi * dr);
  if (k >= 1.0) return boundary;
  // Foot of p in the triangle plane, then the offset along the plane that
  // balances the radius gradient.
  const Eigen::Vector2d xp = Gi * (E.transpose() * (p - c0));
  const double h = (c0 + E * xp - p).norm();
  const double lambda = h / std::sqrt(1.0 - k);
  const Eigen::Vector2d x = xp + lambda * (Gi * dr);
  if (x[0] < 0.0 || x[1] < 0.0 || x[0] + x[1] > 1.0) return boundary;
  const double interior = (c0 + E * x - p).norm() - (r0 + dr.dot(x));
  return std::min(interior, boundary);
}

double envelope_signed_distance(const Vec3& p, const EnvelopePrimitive& prim, const SphereSet& spheres) {
  const MedialSphere& a = spheres[prim.spheres[0]];
  switch (prim.kind) {
    case EnvelopePrimitive::kSphere: return sphere_signed_distance(p, a.center, a.radius);
    case EnvelopePrimitive::kCone: {
      const MedialSphere& b = spheres[prim.spheres[1]];
      return cone_signed_distance(p, a.center, a.radius, b.center, b.radius);
    }
    case EnvelopePrimitive::kSlab: {
      const MedialSphere& b = spheres[prim.spheres[1]];
      const MedialSphere& c = spheres[prim.spheres[2]];
      return slab_signed_distance(p, a.center, a.radius, b.center, b.radius, c.center, c.radius);
    }
  }
  return std::numeric_limits<double>::infinity();
}

Aabb envelope_box(const EnvelopePrimitive& prim, const SphereSet& spheres) {
  Aabb box;
  for (int k = 0; k < static_cast<int>(prim.kind); ++k) {
    const MedialSphere& s = spheres[prim.spheres[k]];
    box.extend(s.center - Vec3::Constant(s.radius));
    box.extend(s.center + Vec3::Constant(s.radius));
  }
  return box;
}

std::vector<EnvelopePrimitive> envelope_primitives(const MedialMesh& mm) {
  std::vector<EnvelopePrimitive> out;
  out.reserve(mm.vertices.size() + mm.edges.size() + mm.faces.size());
  for (Index v : mm.vertices) out.push_back({EnvelopePrimitive::kSphere, {v, kInvalidIndex, kInvalidIndex}});
  for (const auto& e : mm.edges) out.push_back({EnvelopePrimitive::kCone, {e[0], e[1], kInvalidIndex}});
  for (const auto& f : mm.faces) out.push_back({EnvelopePrimitive::kSlab, {f[0], f[1], f[2]}});
  return out;
}

EnvelopeIndex::EnvelopeIndex(const SphereSet& spheres, std::vector<EnvelopePrimitive> prims)
    : spheres_(&spheres), prims_(std::move(prims)) {
  std::vector<Aabb> boxes;
  boxes.reserve(prims_.size());
  for (const auto& p : prims_) boxes.push_back(envelope_box(p, spheres));
  bvh_.build(std::move(boxes));
}

std::pair<Index, double> EnvelopeIndex::nearest(const Vec3& p) const {
  if (prims_.empty()) return {kInvalidIndex, std::numeric_limits<double>::infinity()};
  const auto [item, cost] = bvh_.nearest(p, [&](Index i, double) {
    const double d = envelope_distance(p, prims_[i], *spheres_);
    return d * d;
  });
  return {item, std::sqrt(cost)};
}

double EnvelopeIndex::signed_distance(const Vec3& p) const {
  double inside = 0.0;
  bvh_.for_each_containing(p, [&](Index i) {
    inside = std::min(inside, envelope_signed_distance(p, prims_[i], *spheres_));
  });
  if (inside < 0.0) return inside;
  return nearest(p).second;
}

Aabb EnvelopeIndex::bounds() const {
  Aabb box;
  for (const auto& p : prims_) {
    box.extend(envelope_box(p, *spheres_));
  }
  return box;
}

}  // namespace mattopo
