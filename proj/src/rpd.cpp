#include "mattopo/rpd.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/LU>
#include <json.hpp>

#include "mattopo/mesh_io.h"
#include "mattopo/parallel.h"

namespace mattopo {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("rpd_engine", what); }

constexpr double kSingularDet = 1e-10;

// Solves rows . x = rhs for three unit-normal planes.
bool solve3(const Eigen::Matrix3d& m, const Vec3& rhs, Vec3& out) {
  if (std::abs(m.determinant()) < kSingularDet) return false;
  out = m.partialPivLu().solve(rhs);
  return out.allFinite();
}

}  // namespace

double power_weight(const MedialSphere& m, double jitter) {
  const double w = m.radius * m.radius;
  if (jitter <= 0.0) return w;
  std::uint64_t z = static_cast<std::uint64_t>(m.id) + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return w + jitter * static_cast<double>(z >> 11) * 0x1.0p-53;
}

CellPlane radical_plane(const MedialSphere& mi, const MedialSphere& mj, double jitter) {
  const bool swap = mj.id < mi.id;
  const MedialSphere& lo = swap ? mj : mi;
  const MedialSphere& hi = swap ? mi : mj;
  const Vec3 delta = hi.center - lo.center;
  const double len = 2.0 * delta.norm();
  if (!(len > 0)) fail("coincident sphere centres " + std::to_string(mi.id) + ", " + std::to_string(mj.id));
  // Positive on the side power-closer to lo.
  CellPlane pl;
  pl.n = -2.0 * delta / len;
  pl.d = ((hi.center.squaredNorm() - power_weight(hi, jitter)) - (lo.center.squaredNorm() - power_weight(lo, jitter))) /
         len;
  if (swap) {
    pl.n = -pl.n;
    pl.d = -pl.d;
  }
  pl.tag = mj.id;
  return pl;
}

int VertexKey::num_spheres() const {
  int n = 0;
  for (Index s : spheres) n += s >= 0 ? 1 : 0;
  return n;
}

bool VertexKey::has_sphere(Index s) const {
  return spheres[0] == s || spheres[1] == s || spheres[2] == s || spheres[3] == s;
}

std::size_t VertexKeyHash::operator()(const VertexKey& k) const {
  std::size_t h = std::hash<std::uint64_t>()((static_cast<std::uint64_t>(k.kind) << 32) ^
                                             static_cast<std::uint32_t>(k.element));
  for (Index s : k.spheres) h ^= std::hash<std::int64_t>()(s) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

RpdEngine::RpdEngine(const TetMesh& mesh, RpdOptions options)
    : mesh_(&mesh),
      options_(options),
      eps_clip_(options.eps_clip > 0 ? options.eps_clip : 1e-9 * mesh.bbox_diag),
      jitter_(options.weight_jitter >= 0 ? options.weight_jitter : 1e-9 * mesh.bbox_diag * mesh.bbox_diag),
      payloads_(init_fractional_euler(mesh)),
      tri_(mesh.bbox) {
  std::vector<Aabb> boxes(mesh.tets.size());
  for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) boxes[t] = mesh.tet_box(t);
  tet_bvh_.build(std::move(boxes));
}

const std::vector<RpdCell>& RpdEngine::cells(Index s) const {
  static const std::vector<RpdCell> kEmpty;
  return s >= 0 && s < static_cast<Index>(cells_.size()) ? cells_[s] : kEmpty;
}

const std::vector<Index>& RpdEngine::related_tets(Index s) const {
  static const std::vector<Index> kEmpty;
  return s >= 0 && s < static_cast<Index>(related_.size()) ? related_[s] : kEmpty;
}

double RpdEngine::sphere_volume(Index s) const {
  double v = 0.0;
  for (const RpdCell& c : cells(s)) v += c.volume;
  return v;
}

double RpdEngine::total_volume() const {
  double v = 0.0;
  for (std::size_t s = 0; s < cells_.size(); ++s) v += sphere_volume(static_cast<Index>(s));
  return v;
}

int RpdEngine::local_edge(Index, int a, int b) const {
  if (a > b) std::swap(a, b);
  for (int e = 0; e < 6; ++e)
    if (kTetEdgeVerts[e][0] == a && kTetEdgeVerts[e][1] == b) return e;
  fail("bad local edge");
}

namespace {

VertexKey key_for_planes(const TetMesh& mesh, const std::vector<CellPlane>& planes,
                         const std::array<std::uint16_t, 3>& p, Index tet, Index sphere) {
  int faces[3];
  int nf = 0;
  VertexKey key;
  int ns = 0;
  key.spheres[ns++] = sphere;
  for (int k = 0; k < 3; ++k) {
    const CellPlane& pl = planes[p[k]];
    if (pl.is_tet_face()) {
      faces[nf++] = pl.tet_face();
    } else {
      key.spheres[ns++] = pl.tag;
    }
  }
  std::sort(key.spheres.begin(), key.spheres.begin() + ns);
  const auto& T = mesh.tets[tet];
  switch (nf) {
    case 3: {
      const int missing = 6 - faces[0] - faces[1] - faces[2];
      key.kind = VertexKey::kMeshVertex;
      key.element = T[missing];
      break;
    }
    case 2: {
      int c = -1, d = -1;
      for (int k = 0; k < 4; ++k)
        if (k != faces[0] && k != faces[1]) (c < 0 ? c : d) = k;
      int e = 0;
      while (!(kTetEdgeVerts[e][0] == c && kTetEdgeVerts[e][1] == d)) ++e;
      key.kind = VertexKey::kMeshEdge;
      key.element = mesh.tet_edges[tet][e];
      break;
    }
    case 1:
      key.kind = VertexKey::kMeshFace;
      key.element = mesh.tet_faces[tet][faces[0]];
      break;
    default:
      key.kind = VertexKey::kTetInterior;
      key.element = tet;
      break;
  }
  return key;
}

}  // namespace

VertexKey RpdEngine::vertex_key(const ConvexCell& cell, int vertex, Index tet, Index sphere) const {
  return key_for_planes(*mesh_, cell.planes(), cell.vertices()[vertex].p, tet, sphere);
}

bool RpdEngine::key_position(const SphereSet& spheres, const VertexKey& key, Vec3& out) const {
  const TetMesh& mesh = *mesh_;
  const auto& s = key.spheres;
  switch (key.kind) {
    case VertexKey::kMeshVertex:
      out = mesh.vertices[key.element];
      return true;
    case VertexKey::kMeshEdge: {
      const auto& e = mesh.edges[key.element];
      const CellPlane pl = plane(spheres, s[0], s[1]);
      const Vec3& pu = mesh.vertices[e[0]];
      const Vec3& pv = mesh.vertices[e[1]];
      const double fu = pl.eval(pu);
      const double fv = pl.eval(pv);
      if (fu == fv) return false;
      const double t = fu / (fu - fv);
      out = pu + t * (pv - pu);
      return out.allFinite();
    }
    case VertexKey::kMeshFace: {
      const auto& f = mesh.faces[key.element];
      const Vec3& a = mesh.vertices[f[0]];
      const Vec3 n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).normalized();
      const CellPlane p1 = plane(spheres, s[0], s[1]);
      const CellPlane p2 = plane(spheres, s[0], s[2]);
      Eigen::Matrix3d m;
      m.row(0) = n.transpose();
      m.row(1) = p1.n.transpose();
      m.row(2) = p2.n.transpose();
      return solve3(m, Vec3(n.dot(a), -p1.d, -p2.d), out);
    }
    default: {
      Eigen::Matrix3d m;
      Vec3 rhs;
      for (int k = 0; k < 3; ++k) {
        const CellPlane pl = plane(spheres, s[0], s[k + 1]);
        m.row(k) = pl.n.transpose();
        rhs[k] = -pl.d;
      }
      return solve3(m, rhs, out);
    }
  }
}

bool RpdEngine::tet_relates_to_sphere(const SphereSet& spheres, Index sphere, const std::vector<Index>& nbrs,
                                      Index tet) const {
  const auto& T = mesh_->tets[tet];
  std::size_t d = 0;
  for (Index j : nbrs) {
    const CellPlane pl = plane(spheres, sphere, j);
    bool any = false;
    for (Index v : T) any = any || pl.eval(mesh_->vertices[v]) > -eps_clip_;
    if (!any) return false;
    ++d;
  }
  return d == nbrs.size();
}

RpdCell RpdEngine::clip_cell(const SphereSet& spheres, Index sphere, const std::vector<Index>& planes_of, Index tet,
                             std::uint64_t* fallbacks) const {
  const TetMesh& mesh = *mesh_;
  const auto& T = mesh.tets[tet];
  std::array<Vec3, 4> corners;
  std::array<Rational, 4> vp, fp;
  std::array<Rational, 6> ep;
  for (int k = 0; k < 4; ++k) {
    corners[k] = mesh.vertices[T[k]];
    vp[k] = payloads_.vertex[T[k]];
    fp[k] = payloads_.face[mesh.tet_faces[tet][k]];
  }
  for (int e = 0; e < 6; ++e) ep[e] = payloads_.edge[mesh.tet_edges[tet][e]];

  RpdCell rc;
  rc.sphere = sphere;
  rc.tet = tet;
  rc.cell = ConvexCell::from_tet(corners, vp, ep, fp);
  ConvexCell& cell = rc.cell;
  for (Index j : planes_of) {
    const CellPlane pl = plane(spheres, sphere, j);
    const ClipOutcome outcome = cell.clip(
        pl, [&](const CellVertex& v) { return radical_inside(pl, sphere, v.pos); },
        [&](int a, int b, int P, const CellVertex& vin, const CellVertex& vout) {
          const std::array<std::uint16_t, 3> planes = {static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                                                       static_cast<std::uint16_t>(P)};
          const VertexKey key = key_for_planes(mesh, cell.planes(), planes, tet, sphere);
          Vec3 pos;
          if (key_position(spheres, key, pos)) return pos;
          if (fallbacks) ++*fallbacks;
          const double di = pl.eval(vin.pos);
          const double dout = pl.eval(vout.pos);
          const double t = di == dout ? 0.5 : di / (di - dout);
          return Vec3(vin.pos + t * (vout.pos - vin.pos));
        });
    if (outcome == ClipOutcome::kEmpty) break;
  }
  if (!cell.empty()) {
    rc.keys.reserve(cell.vertices().size());
    for (int v = 0; v < static_cast<int>(cell.vertices().size()); ++v)
      rc.keys.push_back(vertex_key(cell, v, tet, sphere));
    rc.volume = cell.volume();
  }
  return rc;
}

void RpdEngine::recompute_sphere(const SphereSet& spheres, Index s, const Aabb& bound, std::vector<RpdCell>& out,
                                 std::vector<Index>& related, std::uint64_t& candidates,
                                 std::uint64_t& fallbacks) const {
  out.clear();
  related.clear();
  if (spheres[s].deleted || tri_.is_hidden(s) || bound.empty()) return;
  std::vector<Index> cand;
  tet_bvh_.for_each_overlap(bound.inflated(1e-6 * mesh_->bbox_diag), [&](Index t) { cand.push_back(t); });
  std::sort(cand.begin(), cand.end());
  candidates += cand.size();
  const std::vector<Index>& nbrs = neighbors_[s];
  for (Index t : cand) {
    if (!tet_relates_to_sphere(spheres, s, nbrs, t)) continue;
    related.push_back(t);
    RpdCell c = clip_cell(spheres, s, nbrs, t, &fallbacks);
    if (!c.cell.empty()) out.push_back(std::move(c));
  }
}

std::vector<Index> RpdEngine::update(const SphereSet& spheres) {
  const std::size_t n = spheres.size();
  if (inserted_.size() < n) inserted_.resize(n, 0);
  std::vector<char> fresh(n, 0);
  for (Index id = 0; id < static_cast<Index>(n); ++id) {
    const MedialSphere& m = spheres[id];
    if (m.deleted) {
      if (inserted_[id]) fail("sphere " + std::to_string(id) + " deleted after insertion");
      continue;
    }
    if (inserted_[id]) continue;
    tri_.insert(id, m.center, power_weight(m, jitter_));
    inserted_[id] = 1;
    fresh[id] = 1;
  }
  std::vector<std::vector<Index>> nb = tri_.neighbor_sets();
  nb.resize(n);
  neighbors_.resize(n);
  hidden_.resize(n, 0);
  cells_.resize(n);
  related_.resize(n);

  std::vector<Index> dirty;
  for (Index id = 0; id < static_cast<Index>(n); ++id) {
    if (!inserted_[id]) continue;
    const char hid = tri_.is_hidden(id) ? 1 : 0;
    if (fresh[id] || nb[id] != neighbors_[id] || hid != hidden_[id]) dirty.push_back(id);
    hidden_[id] = hid;
  }
  neighbors_ = std::move(nb);

  const std::vector<Aabb> bounds = tri_.cell_bounds(mesh_->bbox);
  std::vector<std::vector<RpdCell>> new_cells(dirty.size());
  std::vector<std::vector<Index>> new_related(dirty.size());
  std::vector<std::uint64_t> cand(dirty.size(), 0), fb(dirty.size(), 0);
  parallel_for(dirty.size(), options_.threads, [&](std::size_t k) {
    const Index s = dirty[k];
    recompute_sphere(spheres, s, bounds[s], new_cells[k], new_related[k], cand[k], fb[k]);
  });
  for (std::size_t k = 0; k < dirty.size(); ++k) {
    stats_.candidate_tets += cand[k];
    stats_.related_tets += new_related[k].size();
    stats_.clipped_cells += new_cells[k].size();
    stats_.position_fallbacks += fb[k];
    cells_[dirty[k]] = std::move(new_cells[k]);
    related_[dirty[k]] = std::move(new_related[k]);
  }
  ++stats_.rounds;
  stats_.last_dirty = dirty.size();
  return dirty;
}

namespace {

std::array<Vec3, 4> enclosing_tet(const Aabb& box) {
  const Vec3 c = box.center();
  const double r = std::max(box.diagonal(), 1.0);
  const double s = 3.0 * r;
  std::array<Vec3, 4> t = {c + s * Vec3(1, 1, 1), c + s * Vec3(1, -1, -1), c + s * Vec3(-1, 1, -1),
                           c + s * Vec3(-1, -1, 1)};
  if ((t[1] - t[0]).dot((t[2] - t[0]).cross(t[3] - t[0])) < 0) std::swap(t[2], t[3]);
  return t;
}

ConvexCell clip_all(ConvexCell cell, const SphereSet& spheres, Index i, double jitter) {
  for (Index j = 0; j < static_cast<Index>(spheres.size()); ++j) {
    if (j == i || spheres[j].deleted) continue;
    const CellPlane pl = radical_plane(spheres[i], spheres[j], jitter);
    const ClipOutcome out = cell.clip(
        pl, [&](const CellVertex& v) { return radical_inside(pl, i, v.pos); },
        [&](int a, int b, int P, const CellVertex& vin, const CellVertex& vout) {
          const double di = pl.eval(vin.pos);
          const double dout = pl.eval(vout.pos);
          const double t = di == dout ? 0.5 : di / (di - dout);
          return cell.intersect(a, b, P, vin.pos + t * (vout.pos - vin.pos));
        });
    if (out == ClipOutcome::kEmpty) break;
  }
  return cell;
}

}  // namespace

std::vector<std::vector<Index>> brute_force_neighbors(const SphereSet& spheres, const Aabb& box, double min_area,
                                                      double jitter) {
  std::vector<std::vector<Index>> out(spheres.size());
  const auto corners = enclosing_tet(box);
  for (Index i = 0; i < static_cast<Index>(spheres.size()); ++i) {
    if (spheres[i].deleted) continue;
    const ConvexCell cell = clip_all(ConvexCell::from_tet(corners), spheres, i, jitter);
    const auto polys = cell.facet_polygons();
    for (std::size_t p = 0; p < polys.size(); ++p) {
      const CellPlane& pl = cell.planes()[p];
      if (pl.is_tet_face() || polys[p].size() < 3) continue;
      if (cell.facet_area(polys[p]) > min_area) out[i].push_back(pl.tag);
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

ConvexCell brute_force_cell(const TetMesh& mesh, const SphereSet& spheres, Index sphere, Index tet,
                            double jitter) {
  std::array<Vec3, 4> corners;
  for (int k = 0; k < 4; ++k) corners[k] = mesh.vertices[mesh.tets[tet][k]];
  return clip_all(ConvexCell::from_tet(corners), spheres, sphere, jitter);
}

void export_rpd_debug(const RpdEngine& rpd, const SphereSet& spheres, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const TetMesh& mesh = rpd.mesh();
  nlohmann::json summary = nlohmann::json::object();
  for (Index s = 0; s < static_cast<Index>(spheres.size()); ++s) {
    const auto& cells = rpd.cells(s);
    if (cells.empty()) continue;
    std::vector<Vec3> verts;
    std::vector<std::array<Index, 3>> tris;
    std::size_t n_facets = 0;
    for (const RpdCell& rc : cells) {
      const auto polys = rc.cell.facet_polygons();
      for (std::size_t p = 0; p < polys.size(); ++p) {
        if (polys[p].size() < 3) continue;
        const CellPlane& pl = rc.cell.planes()[p];
        if (pl.is_tet_face() && !mesh.is_boundary_face(mesh.tet_faces[rc.tet][pl.tet_face()])) continue;
        ++n_facets;
        const Index base = static_cast<Index>(verts.size());
        for (int v : polys[p]) verts.push_back(mesh.normalization.to_original(rc.cell.vertices()[v].pos));
        for (std::size_t k = 1; k + 1 < polys[p].size(); ++k)
          tris.push_back({base, base + static_cast<Index>(k), base + static_cast<Index>(k + 1)});
      }
    }
    write_obj((fs::path(dir) / ("rpc_" + std::to_string(s) + ".obj")).string(), verts, tris);
    const double scale = mesh.normalization.scale;
    summary[std::to_string(s)] = {{"volume", rpd.sphere_volume(s) / (scale * scale * scale)},
                                  {"n_cells", cells.size()},
                                  {"n_facets", n_facets}};
  }
  std::ofstream out(fs::path(dir) / "rpd_summary.json");
  out << summary.dump(2) << '\n';
}

}  // namespace mattopo
