#include "mattopo/sphere.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/QR>

#include "mattopo/geom.h"

namespace mattopo {

namespace {
[[noreturn]] void fail(const std::string& what) { throw Error("spheres", what); }
}  // namespace

const char* sphere_kind_name(SphereKind kind) {
  switch (kind) {
    case SphereKind::kT2: return "T2";
    case SphereKind::kTN: return "TN";
    case SphereKind::kFeatureEdge: return "feature_edge";
    case SphereKind::kCorner: return "corner";
  }
  return "?";
}

SphereKind parse_sphere_kind(const std::string& name) {
  if (name == "T2") return SphereKind::kT2;
  if (name == "TN") return SphereKind::kTN;
  if (name == "feature_edge") return SphereKind::kFeatureEdge;
  if (name == "corner") return SphereKind::kCorner;
  fail("unknown sphere kind '" + name + "'");
}

ShrinkParams ShrinkParams::for_diagonal(double diag) {
  ShrinkParams p;
  p.initial_radius = 0.5 * diag;
  p.epsilon = 1e-4 * diag;
  p.tangent_tol = 1e-3 * diag;
  p.max_iters = 50;
  return p;
}

MedialSphere sphere_shrink(const NearestSurfaceFn& nearest, const Vec3& pin, const Vec3& normal,
                           const ShrinkParams& params, ShrinkTrace* trace) {
  const double nn = normal.norm();
  if (!(nn > 0.5)) fail("degenerate pin normal");
  const Vec3 inward = -normal / nn;

  double r = params.initial_radius;
  Vec3 c = pin + r * inward;
  Vec3 q = pin;
  Vec3 q_normal = normal / nn;
  bool converged = false;
  for (int it = 0; it < params.max_iters; ++it) {
    const SurfaceIndex::Hit hit = nearest(c);
    q = hit.point;
    q_normal = hit.normal;
    if (hit.distance >= r - params.epsilon) {
      converged = true;
      break;
    }
    const Vec3 pq = q - pin;
    const double denom = 2.0 * inward.dot(pq);
    if (!(denom > 0)) {
      // The nearest point sits at the pin itself; the ball is already empty.
      converged = true;
      break;
    }
    const double r_new = std::min(r, pq.squaredNorm() / denom);
    const double change = r - r_new;
    r = r_new;
    c = pin + r * inward;
    if (trace) trace->radii.push_back(r);
    if (change < params.epsilon) {
      const SurfaceIndex::Hit last = nearest(c);
      q = last.point;
      q_normal = last.normal;
      converged = true;
      break;
    }
  }

  MedialSphere m;
  m.center = c;
  m.radius = r;
  m.kind = SphereKind::kT2;
  m.converged = converged;
  m.tangents = {{pin, normal / nn}, {q, q_normal}};
  return m;
}

MedialSphere sphere_shrink(const SurfaceIndex& surface, const Vec3& pin, const Vec3& normal,
                           const ShrinkParams& params, ShrinkTrace* trace) {
  return sphere_shrink([&surface](const Vec3& p) { return surface.nearest(p); }, pin, normal, params,
                       trace);
}

double tangency_residual(const std::vector<TangentPoint>& planes, const Vec3& center, double radius) {
  double s = 0.0;
  for (const TangentPoint& t : planes) {
    const double v = t.normal.dot(center - t.point) + radius;
    s += v * v;
  }
  return s;
}

MedialSphere optimize_tn_sphere(const std::vector<TangentPoint>& planes, const MedialSphere& init) {
  if (planes.size() < 3) fail("rank-deficient tangency system (fewer than 3 planes)");
  const Eigen::Index n = static_cast<Eigen::Index>(planes.size());
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A.row(i) << planes[i].normal.transpose(), 1.0;
    b[i] = planes[i].normal.dot(planes[i].point);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-8);
  if (cod.rank() < 3) fail("rank-deficient tangency system (nearly parallel planes)");
  Eigen::Vector4d x0;
  x0 << init.center, init.radius;
  const Eigen::Vector4d x = x0 + cod.solve(b - A * x0);

  MedialSphere m = init;
  m.center = x.head<3>();
  m.radius = x[3];
  m.kind = SphereKind::kTN;
  m.tangents = planes;
  m.tangent_clusters = static_cast<int>(planes.size());
  return m;
}

MedialSphere make_feature_sphere(const TetMesh& mesh, const Vec3& position, SphereKind kind) {
  const double tol = 1e-6 * mesh.bbox_diag;
  bool ok = false;
  if (kind == SphereKind::kCorner) {
    for (Index c : mesh.corners) ok = ok || (mesh.vertices[c] - position).norm() <= tol;
  } else if (kind == SphereKind::kFeatureEdge) {
    for (const FeatureEdge& e : mesh.feature_edges) {
      const Vec3 q = closest_point_on_segment(position, mesh.vertices[e.v0], mesh.vertices[e.v1]);
      ok = ok || (q - position).norm() <= tol;
    }
  } else {
    fail("feature spheres must be of corner or feature-edge kind");
  }
  if (!ok) fail("position is not on a detected feature");
  MedialSphere m;
  m.center = position;
  m.radius = 0.0;
  m.kind = kind;
  return m;
}

Index SphereSet::find_duplicate(const MedialSphere& sphere) const {
  for (const MedialSphere& s : spheres_) {
    if (s.deleted) continue;
    const double d = (s.center - sphere.center).norm();
    if (d == 0.0) return s.id;
    if (d < dedup_radius_ && std::abs(s.radius - sphere.radius) < dedup_radius_) return s.id;
  }
  return kInvalidIndex;
}

Index SphereSet::add(MedialSphere sphere) {
  if (!std::isfinite(sphere.radius) || !sphere.center.allFinite() || sphere.radius < 0)
    fail("refusing to add a non-finite or negative-radius sphere");
  if (find_duplicate(sphere) != kInvalidIndex) return kInvalidIndex;
  sphere.id = static_cast<Index>(spheres_.size());
  sphere.deleted = false;
  sphere.is_new = true;
  spheres_.push_back(std::move(sphere));
  return spheres_.back().id;
}

void SphereSet::clear_new_flags() {
  for (MedialSphere& s : spheres_) s.is_new = false;
}

std::size_t SphereSet::active_count() const {
  std::size_t n = 0;
  for (const MedialSphere& s : spheres_) n += s.deleted ? 0 : 1;
  return n;
}

std::vector<Index> SphereSet::active_ids() const {
  std::vector<Index> ids;
  for (const MedialSphere& s : spheres_)
    if (!s.deleted) ids.push_back(s.id);
  return ids;
}

void write_sph(const std::string& path, const SphereSet& spheres, const Normalization* denorm) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << std::setprecision(17);
  for (const MedialSphere& s : spheres.all()) {
    if (s.deleted) continue;
    const Vec3 c = denorm ? denorm->to_original(s.center) : s.center;
    const double r = denorm ? denorm->length_to_original(s.radius) : s.radius;
    out << s.id << ' ' << c.x() << ' ' << c.y() << ' ' << c.z() << ' ' << r << ' '
        << sphere_kind_name(s.kind) << '\n';
  }
}

std::vector<MedialSphere> read_sph(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::vector<MedialSphere> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    MedialSphere m;
    std::string kind;
    if (!(ls >> m.id >> m.center.x() >> m.center.y() >> m.center.z() >> m.radius >> kind)) continue;
    m.kind = parse_sphere_kind(kind);
    m.is_new = false;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mattopo
