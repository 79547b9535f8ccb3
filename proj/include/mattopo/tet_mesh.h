#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mattopo/bvh.h"
#include "mattopo/common.h"

namespace mattopo {

/// Local face k of a tet is opposite local vertex k; the vertex order below
/// makes the face normal point out of the tet for positively oriented tets.
inline constexpr std::array<std::array<int, 3>, 4> kTetFaceVerts = {{
    {1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

/// Local edge e joins local vertices kTetEdgeVerts[e].
inline constexpr std::array<std::array<int, 2>, 6> kTetEdgeVerts = {{
    {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct SurfaceTri {
  std::array<Index, 3> v{};  // outward-facing order
  Index tet = kInvalidIndex;
  int local_face = -1;
  Index face = kInvalidIndex;  // global face id
  Vec3 normal = Vec3::Zero();  // unit outward normal
  double area = 0.0;
};

enum class FeatureKind : std::uint8_t { kConvex, kConcave };

struct FeatureEdge {
  Index v0 = kInvalidIndex;
  Index v1 = kInvalidIndex;
  FeatureKind kind = FeatureKind::kConvex;
};

/// A maximal chain of feature edges between corners (or a closed loop).
struct FeatureLine {
  std::vector<Index> verts;   // polyline vertex ids; closed loops repeat the first id at the end
  std::vector<Index> edges;   // feature edge ids, one per polyline segment
  FeatureKind kind = FeatureKind::kConvex;
  bool closed = false;
};

/// Affine map applied on load: normalized = (original - offset) * scale.
struct Normalization {
  Vec3 offset = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_original(const Vec3& p) const { return p / scale + offset; }
  double length_to_original(double l) const { return l / scale; }
};

/// Volumetric input domain. Built once and read-only afterwards.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 4>> tets;
  std::vector<SurfaceTri> surface_tris;
  std::vector<FeatureEdge> feature_edges;
  std::vector<Index> corners;
  std::vector<FeatureLine> feature_lines;
  Aabb bbox;
  double bbox_diag = 0.0;
  Normalization normalization;

  // Combinatorial tables of the tet complex.
  std::vector<std::array<Index, 2>> edges;      // sorted vertex pairs
  std::vector<std::array<Index, 3>> faces;      // sorted vertex triples
  std::vector<std::array<Index, 4>> tet_faces;  // local face -> global face
  std::vector<std::array<Index, 6>> tet_edges;  // local edge -> global edge
  std::vector<std::array<Index, 2>> face_tets;  // second entry is -1 on the boundary
  std::vector<int> vertex_valence;              // #tets containing each vertex
  std::vector<int> edge_valence;
  std::vector<Index> face_surface;              // face -> surface tri or -1

  // Surface connectivity.
  std::vector<std::array<Index, 2>> surface_edges;          // sorted vertex pairs
  std::vector<std::array<Index, 2>> surface_edge_tris;      // the two incident surface tris
  std::vector<std::vector<Index>> vertex_surface_tris;      // surface tris around each vertex

  int face_valence(Index f) const { return face_tets[f][1] == kInvalidIndex ? 1 : 2; }
  bool is_boundary_face(Index f) const { return face_tets[f][1] == kInvalidIndex; }
  double tet_volume(Index t) const;
  double total_volume() const;
  Aabb tet_box(Index t) const;
  Vec3 surface_vertex_normal(Index v) const;
};

/// Validates a raw tet soup and builds every table of TetMesh. With
/// `normalize` the vertices are mapped into [0,1000]^3 preserving aspect
/// ratio. Throws Error("mesh_core", ...) on inverted tets or a boundary that
/// is not a closed 2-manifold.
TetMesh build_tet_mesh(std::vector<Vec3> vertices, std::vector<std::array<Index, 4>> tets,
                       bool normalize = true);

/// Flags surface edges whose dihedral angle deviates from pi by more than the
/// threshold, marks corners, and chains the feature edges into lines.
void detect_features(TetMesh& mesh, double angle_threshold_deg);

/// Installs externally supplied sharp edges / corners (e.g. from a .fea
/// file). Convexity is classified from the geometry.
void set_features(TetMesh& mesh, const std::vector<std::array<Index, 2>>& sharp_edges,
                  const std::vector<Index>& corners);

/// Convex / concave classification of a surface edge from its two triangles.
FeatureKind classify_surface_edge(const TetMesh& mesh, Index surface_edge);

/// Chains feature_edges into feature_lines, splitting at corners.
void build_feature_lines(TetMesh& mesh);

enum class SampleKind : std::uint8_t { kFeatureEdge, kCorner, kSurface };

struct SurfaceSample {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  SampleKind kind = SampleKind::kSurface;
  Index source = kInvalidIndex;  // surface tri, feature edge or vertex id
};

/// Area-weighted Poisson samples on surface triangles plus arc-length uniform
/// samples on feature lines and one sample per corner. Deterministic in seed.
std::vector<SurfaceSample> sample_surface(const TetMesh& mesh, double density, std::uint64_t seed);

/// V - E + F - C of the tet complex.
int mesh_euler(const TetMesh& mesh);

/// V - E + F of the boundary surface.
int surface_euler(const TetMesh& mesh);

/// Nearest-point queries against the boundary triangles.
class SurfaceIndex {
 public:
  struct Hit {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Index tri = kInvalidIndex;
    double distance = 0.0;
  };

  SurfaceIndex() = default;
  explicit SurfaceIndex(const TetMesh& mesh);
  SurfaceIndex(std::vector<Vec3> vertices, std::vector<std::array<Index, 3>> tris);

  Hit nearest(const Vec3& p) const;
  bool empty() const { return tris_.empty(); }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<Index, 3>>& tris() const { return tris_; }
  const Vec3& normal(Index t) const { return normals_[t]; }

 private:
  void init();

  std::vector<Vec3> vertices_;
  std::vector<std::array<Index, 3>> tris_;
  std::vector<Vec3> normals_;
  Bvh bvh_;
};

}  // namespace mattopo
