#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mattopo/medial_mesh.h"
#include "mattopo/rpd.h"
#include "mattopo/sphere.h"
#include "mattopo/tet_mesh.h"
#include "mattopo/topo.h"

namespace mattopo {

/// Piece of a feature line between two arc-length stations.
struct FeatureSegment {
  Index line = kInvalidIndex;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 midpoint = Vec3::Zero();
  Index edge = kInvalidIndex;  // feature edge holding the midpoint
  FeatureKind kind = FeatureKind::kConvex;
};

/// Splits every feature line at uniform arc length no longer than `h`.
std::vector<FeatureSegment> segment_feature_lines(const TetMesh& mesh, double h);

/// Active sphere minimising the power distance to p (brute force).
Index power_nearest_sphere(const SphereSet& spheres, const Vec3& p);

struct FeatureCoverage {
  std::vector<Index> owner;      // per segment: power-nearest sphere at the midpoint
  std::vector<Index> uncovered;  // segments owned by non-feature spheres
  bool complete() const { return uncovered.empty(); }
};

FeatureCoverage feature_coverage(const std::vector<FeatureSegment>& segments, const SphereSet& spheres);

struct FeatureParams {
  double segment_length = 20.0;  // h_fea; 2% of the diagonal after normalisation
  double delta_eps = 0.6;        // geometric bound in percent of the diagonal, sizes concave fans
  double sheet_angle_deg = 30.0;
  double min_region_fraction = 0.05;
  ShrinkParams shrink;
  std::uint64_t seed = 0;
};

/// Spheres pinned at a point `p` of a concave edge whose pin normals sweep
/// from `na` to `nb` (the outward normals of the two faces). Consecutive
/// members are close enough in angle that the hull of two of them bulges
/// past the edge by at most `max_bulge`.
std::vector<MedialSphere> concave_fan_spheres(const SurfaceIndex& surface, const Vec3& p, const Vec3& na,
                                              const Vec3& nb, double max_bulge, const ShrinkParams& shrink);

/// Remembers concave seeds and internal pairs already acted on so repeated
/// rounds do not insert the same sphere twice.
struct FeatureMemory {
  std::set<std::size_t> concave_seeded;
  std::set<std::pair<Index, Index>> pairs_tried;
};

/// Corner spheres, zero-radius spheres on uncovered convex segment midpoints
/// and uncovered convex feature samples, and a fan of tangent spheres at the
/// midpoint of every concave segment.
std::vector<MedialSphere> preserve_external_features(const TetMesh& mesh, const SphereSet& spheres,
                                                     const std::vector<FeatureSegment>& segments,
                                                     const std::vector<SurfaceSample>& samples,
                                                     const SurfaceIndex& surface, const FeatureParams& params,
                                                     FeatureMemory& memory);

/// Surface regions: connected components of surface triangles across edges
/// whose dihedral deviation stays below the sheet angle.
std::vector<int> surface_regions(const TetMesh& mesh, double angle_deg);

/// Regions touched by an RPC: those holding at least `min_fraction` of its
/// surface area. Sorted.
std::vector<int> region_signature(const RestrictedElements& R, const std::vector<int>& regions, double min_fraction);

enum class SheetRelation { kSameSheet, kCrossSheet };

/// Same sheet when both spheres touch exactly the same surface regions. Empty
/// signatures (deep interior spheres) count as same sheet.
SheetRelation check_internal_feature_pair(const std::vector<int>& sig_i, const std::vector<int>& sig_j);

/// Tangent planes of a sphere: its stored tangent points, clustered by normal.
std::vector<TangentPoint> tangent_planes(const MedialSphere& m, double angle_deg);

/// Seam spheres for cross-sheet medial edges, visited in seeded order.
/// Edges whose spheres offer fewer than three tangent planes, or whose T_N
/// solve fails or leaves the shape, are skipped.
std::vector<MedialSphere> preserve_internal_features(const TetMesh& mesh, const MedialMesh& mm,
                                                     const std::vector<RestrictedElements>& elements,
                                                     const SphereSet& spheres, const SurfaceIndex& surface,
                                                     const FeatureParams& params, FeatureMemory& memory);

/// External feature lines and internal seam curves (medial edges joining
/// T_N spheres) as polylines in original units.
void export_feature_curves(const std::string& external_path, const std::string& internal_path,
                           const TetMesh& mesh, const MedialMesh& mm, const SphereSet& spheres);

}  // namespace mattopo
