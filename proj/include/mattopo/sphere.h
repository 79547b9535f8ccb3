#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mattopo/common.h"
#include "mattopo/tet_mesh.h"

namespace mattopo {

enum class SphereKind : std::uint8_t { kT2, kTN, kFeatureEdge, kCorner };

const char* sphere_kind_name(SphereKind kind);
SphereKind parse_sphere_kind(const std::string& name);

struct TangentPoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward surface normal at point
};

struct MedialSphere {
  Index id = kInvalidIndex;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  SphereKind kind = SphereKind::kT2;
  int tangent_clusters = 0;  // n of a T_N sphere
  std::vector<TangentPoint> tangents;
  bool is_new = true;
  bool deleted = false;
  bool converged = true;  // false when shrinking hit max_iters

  bool is_feature() const { return kind == SphereKind::kFeatureEdge || kind == SphereKind::kCorner; }
};

/// ||p - center||^2 - r^2.
inline double power_distance(const MedialSphere& m, const Vec3& p) {
  return (p - m.center).squaredNorm() - m.radius * m.radius;
}

/// Closest surface point query; returns the point and the outward normal.
using NearestSurfaceFn = std::function<SurfaceIndex::Hit(const Vec3&)>;

struct ShrinkParams {
  double initial_radius = 500.0;
  double epsilon = 0.1;      // convergence on radius change
  double tangent_tol = 1.0;  // stop when the nearest point is this close to the sphere
  int max_iters = 50;

  /// Defaults scaled by the bounding-box diagonal.
  static ShrinkParams for_diagonal(double diag);
};

struct ShrinkTrace {
  std::vector<double> radii;  // radius after every iteration
};

/// Shrinks a ball tangent at `pin` (outward normal `normal`) until it only
/// touches the surface. Throws Error("spheres") on a degenerate normal.
MedialSphere sphere_shrink(const NearestSurfaceFn& nearest, const Vec3& pin, const Vec3& normal,
                           const ShrinkParams& params, ShrinkTrace* trace = nullptr);

/// Convenience overload on a surface index.
MedialSphere sphere_shrink(const SurfaceIndex& surface, const Vec3& pin, const Vec3& normal,
                           const ShrinkParams& params, ShrinkTrace* trace = nullptr);

/// Least-squares sphere tangent to the given planes (outward normals):
/// minimizes sum_i (n_i . (c - p_i) + r)^2 taking the minimal-norm step from
/// `init`. Throws Error("spheres") when the system has rank below 3.
MedialSphere optimize_tn_sphere(const std::vector<TangentPoint>& planes, const MedialSphere& init);

/// Objective of optimize_tn_sphere for a given sphere.
double tangency_residual(const std::vector<TangentPoint>& planes, const Vec3& center, double radius);

/// Zero-radius sphere at a feature point. Throws Error("spheres") when the
/// position is farther than 1e-6 * diag from every corner (kCorner) or
/// feature edge (kFeatureEdge).
MedialSphere make_feature_sphere(const TetMesh& mesh, const Vec3& position, SphereKind kind);

/// Registry with stable ids; deleted spheres are tombstoned.
class SphereSet {
 public:
  explicit SphereSet(double dedup_radius = 0.0) : dedup_radius_(dedup_radius) {}

  /// Assigns the next id and stores the sphere unless it duplicates an active
  /// one (centre and radius both within the dedup radius). Returns the id or
  /// kInvalidIndex on rejection.
  Index add(MedialSphere sphere);
  Index find_duplicate(const MedialSphere& sphere) const;

  void remove(Index id) { spheres_[id].deleted = true; }
  void clear_new_flags();

  std::size_t size() const { return spheres_.size(); }
  std::size_t active_count() const;
  std::vector<Index> active_ids() const;
  const MedialSphere& operator[](Index id) const { return spheres_[id]; }
  MedialSphere& operator[](Index id) { return spheres_[id]; }
  const std::vector<MedialSphere>& all() const { return spheres_; }
  double dedup_radius() const { return dedup_radius_; }

 private:
  double dedup_radius_;
  std::vector<MedialSphere> spheres_;
};

/// `.sph` text: one `id x y z r kind` line per active sphere.
void write_sph(const std::string& path, const SphereSet& spheres, const Normalization* denorm = nullptr);
std::vector<MedialSphere> read_sph(const std::string& path);

}  // namespace mattopo
