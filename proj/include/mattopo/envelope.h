#pragma once

#include <array>
#include <vector>

#include "mattopo/bvh.h"
#include "mattopo/medial_mesh.h"
#include "mattopo/sphere.h"

namespace mattopo {

/// Sphere, medial cone (edge) or medial slab (face) of a medial mesh.
struct EnvelopePrimitive {
  enum Kind : std::uint8_t { kSphere = 1, kCone = 2, kSlab = 3 };
  Kind kind = kSphere;
  std::array<Index, 3> spheres{kInvalidIndex, kInvalidIndex, kInvalidIndex};
};

/// Signed distance to the union of the interpolated spheres: exact outside,
/// negative inside. These minimise |p - c| - r over the interpolation
/// parameters, which is convex, so the minimiser has a closed form.
double sphere_signed_distance(const Vec3& p, const Vec3& c, double r);
double cone_signed_distance(const Vec3& p, const Vec3& c0, double r0, const Vec3& c1, double r1);
double slab_signed_distance(const Vec3& p, const Vec3& c0, double r0, const Vec3& c1, double r1, const Vec3& c2,
                            double r2);

double envelope_signed_distance(const Vec3& p, const EnvelopePrimitive& prim, const SphereSet& spheres);

/// Unsigned distance to the primitive's envelope, 0 inside.
inline double envelope_distance(const Vec3& p, const EnvelopePrimitive& prim, const SphereSet& spheres) {
  const double d = envelope_signed_distance(p, prim, spheres);
  return d > 0.0 ? d : 0.0;
}

Aabb envelope_box(const EnvelopePrimitive& prim, const SphereSet& spheres);

/// Vertices, edges and faces of the mesh as primitives.
std::vector<EnvelopePrimitive> envelope_primitives(const MedialMesh& mm);

/// Nearest-primitive queries over a fixed primitive list.
class EnvelopeIndex {
 public:
  EnvelopeIndex(const SphereSet& spheres, std::vector<EnvelopePrimitive> prims);

  bool empty() const { return prims_.empty(); }
  const std::vector<EnvelopePrimitive>& primitives() const { return prims_; }

  /// Unsigned distance to the union of all envelopes, with the primitive
  /// attaining it (kInvalidIndex when empty).
  std::pair<Index, double> nearest(const Vec3& p) const;
  double distance(const Vec3& p) const { return nearest(p).second; }
  /// Minimum signed distance over all primitives.
  double signed_distance(const Vec3& p) const;
  Aabb bounds() const;

  /// Signed distance to one primitive.
  double signed_distance(const Vec3& p, Index prim) const {
    return envelope_signed_distance(p, prims_[prim], *spheres_);
  }

  /// Calls f(prim, signed distance at p) for every primitive whose box lies
  /// within `radius` of p; the others are farther than `radius`.
  template <class F>
  void for_each_candidate(const Vec3& p, double radius, F&& f) const {
    if (radius < 0.0) radius = 0.0;
    Aabb q;
    q.extend(p);
    bvh_.for_each_overlap(q.inflated(radius), [&](Index i) { f(i, signed_distance(p, i)); });
  }

 private:
  const SphereSet* spheres_;
  std::vector<EnvelopePrimitive> prims_;
  Bvh bvh_;
};

}  // namespace mattopo
