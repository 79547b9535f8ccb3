#include "mattopo/regular_triangulation.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>

namespace mattopo {

namespace {
[[noreturn]] void fail(const std::string& what) { throw Error("rpd_engine", what); }
}  // namespace

RegularTriangulation::RegularTriangulation(const Aabb& domain) {
  const Vec3 c = domain.empty() ? Vec3::Zero() : domain.center();
  const double l = std::max(1.0, domain.empty() ? 1.0 : domain.extent().maxCoeff());
  const double s = 1e3 * l;
  const Vec3 dirs[4] = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  for (int k = 0; k < 4; ++k) {
    WeightedPoint w;
    w.p = (c + s * dirs[k]).array().round();
    w.weight = 0.0;
    w.id = static_cast<Index>(-4 + k);
    points_.push_back(w);
    external_.push_back(kInvalidIndex);
    hidden_.push_back(0);
    hidden_nbrs_.emplace_back();
  }
  std::array<int, 4> v = {0, 1, 2, 3};
  if (orient3d(points_[0].p, points_[1].p, points_[2].p, points_[3].p) < 0) std::swap(v[2], v[3]);
  last_ = new_tet(v);
}

int RegularTriangulation::new_tet(const std::array<int, 4>& v) {
  Tet t;
  t.v = v;
  if (!free_.empty()) {
    const int id = free_.back();
    free_.pop_back();
    tets_[id] = t;
    return id;
  }
  tets_.push_back(t);
  return static_cast<int>(tets_.size()) - 1;
}

bool RegularTriangulation::contains(Index id) const {
  return id >= 0 && id < static_cast<Index>(internal_.size()) && internal_[id] >= 0;
}

bool RegularTriangulation::is_hidden(Index id) const { return contains(id) && hidden_[internal_[id]]; }

std::size_t RegularTriangulation::num_live_tets() const {
  std::size_t n = 0;
  for (const Tet& t : tets_) n += t.alive ? 1 : 0;
  return n;
}

int RegularTriangulation::locate(const Vec3& p) {
  int t = last_;
  if (t < 0 || t >= static_cast<int>(tets_.size()) || !tets_[t].alive) {
    t = 0;
    while (!tets_[t].alive) ++t;
  }
  const std::size_t max_steps = 4 * tets_.size() + 64;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Tet& tet = tets_[t];
    rng_ ^= rng_ << 13;
    rng_ ^= rng_ >> 7;
    rng_ ^= rng_ << 17;
    const int r = static_cast<int>(rng_ & 3u);
    int next = -1;
    for (int k = 0; k < 4 && next < 0; ++k) {
      const int f = (r + k) & 3;
      Vec3 q[4];
      for (int j = 0; j < 4; ++j) q[j] = points_[tet.v[j]].p;
      q[f] = p;
      if (orient3d(q[0], q[1], q[2], q[3]) < 0) next = tet.nbr[f];
    }
    if (next < 0) return t;
    t = next;
  }
  fail("point location did not terminate");
}

bool RegularTriangulation::conflict(int t, int vertex) const {
  const Tet& tet = tets_[t];
  return power_conflict(points_[tet.v[0]], points_[tet.v[1]], points_[tet.v[2]], points_[tet.v[3]],
                        points_[vertex]);
}

bool RegularTriangulation::insert(Index id, const Vec3& p, double weight) {
  if (id < 0) fail("negative point id");
  if (contains(id)) fail("point id inserted twice");
  if (static_cast<Index>(internal_.size()) <= id) internal_.resize(id + 1, -1);
  const int q = static_cast<int>(points_.size());
  points_.push_back({p, weight, id});
  external_.push_back(id);
  hidden_.push_back(0);
  hidden_nbrs_.emplace_back();
  internal_[id] = q;

  const int start = locate(p);
  if (!conflict(start, q)) {
    hidden_[q] = 1;
    for (int v : tets_[start].v)
      if (!is_super(v)) hidden_nbrs_[q].push_back(external_[v]);
    std::sort(hidden_nbrs_[q].begin(), hidden_nbrs_[q].end());
    return false;
  }

  std::vector<char> in_cavity(tets_.size(), 0);
  std::vector<int> cavity = {start};
  in_cavity[start] = 1;
  for (std::size_t i = 0; i < cavity.size(); ++i) {
    for (int n : tets_[cavity[i]].nbr) {
      if (n < 0 || in_cavity[n]) continue;
      if (conflict(n, q)) {
        in_cavity[n] = 1;
        cavity.push_back(n);
      }
    }
  }

  struct BoundaryFace {
    int tet;
    int k;
  };
  std::vector<BoundaryFace> boundary;
  // Grow the cavity until it is star-shaped from p; only needed on exact
  // degeneracies where the perturbed conflict test and orientation disagree.
  while (true) {
    boundary.clear();
    int grow = -1;
    for (int c : cavity) {
      const Tet& tet = tets_[c];
      for (int k = 0; k < 4 && grow < 0; ++k) {
        const int n = tet.nbr[k];
        if (n >= 0 && in_cavity[n]) continue;
        Vec3 pts[4];
        for (int j = 0; j < 4; ++j) pts[j] = points_[tet.v[j]].p;
        pts[k] = p;
        if (orient3d(pts[0], pts[1], pts[2], pts[3]) <= 0) {
          if (n < 0) fail("point outside the bounding tetrahedron");
          grow = n;
        } else {
          boundary.push_back({c, k});
        }
      }
      if (grow >= 0) break;
    }
    if (grow < 0) break;
    in_cavity[grow] = 1;
    cavity.push_back(grow);
  }

  // Vertices swallowed by the cavity become hidden.
  std::vector<int> on_boundary;
  for (const BoundaryFace& bf : boundary)
    for (int j = 0; j < 4; ++j)
      if (j != bf.k) on_boundary.push_back(tets_[bf.tet].v[j]);
  std::sort(on_boundary.begin(), on_boundary.end());
  for (int c : cavity)
    for (int v : tets_[c].v) {
      if (std::binary_search(on_boundary.begin(), on_boundary.end(), v) || hidden_[v]) continue;
      if (is_super(v)) fail("bounding vertex swallowed by insertion");
      hidden_[v] = 1;
      hidden_nbrs_[v] = {id};
    }

  std::map<std::pair<int, int>, std::pair<int, int>> open_faces;
  int created = -1;
  for (const BoundaryFace& bf : boundary) {
    std::array<int, 4> v = tets_[bf.tet].v;
    const int outside = tets_[bf.tet].nbr[bf.k];
    v[bf.k] = q;
    const int nt = new_tet(v);
    if (static_cast<int>(in_cavity.size()) <= nt) in_cavity.resize(nt + 1, 0);
    created = nt;
    tets_[nt].nbr[bf.k] = outside;
    if (outside >= 0)
      for (int& back : tets_[outside].nbr)
        if (back == bf.tet) back = nt;
    for (int j = 0; j < 4; ++j) {
      if (j == bf.k) continue;
      int a = -1, b = -1;
      for (int m = 0; m < 4; ++m) {
        if (m == j || m == bf.k) continue;
        (a < 0 ? a : b) = v[m];
      }
      const std::pair<int, int> key = std::minmax(a, b);
      auto it = open_faces.find(key);
      if (it == open_faces.end()) {
        open_faces.emplace(key, std::make_pair(nt, j));
      } else {
        tets_[nt].nbr[j] = it->second.first;
        tets_[it->second.first].nbr[it->second.second] = nt;
        open_faces.erase(it);
      }
    }
  }
  if (!open_faces.empty()) fail("cavity boundary is not a closed surface");
  for (int c : cavity) {
    tets_[c].alive = false;
    free_.push_back(c);
  }
  last_ = created;
  return true;
}

std::vector<std::vector<Index>> RegularTriangulation::neighbor_sets() const {
  std::vector<std::vector<Index>> out(internal_.size());
  for (const Tet& t : tets_) {
    if (!t.alive) continue;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (a != b && !is_super(t.v[a]) && !is_super(t.v[b]))
          out[external_[t.v[a]]].push_back(external_[t.v[b]]);
  }
  for (std::size_t id = 0; id < internal_.size(); ++id) {
    const int v = internal_[id];
    if (v >= 0 && hidden_[v]) out[id] = hidden_nbrs_[v];
    std::sort(out[id].begin(), out[id].end());
    out[id].erase(std::unique(out[id].begin(), out[id].end()), out[id].end());
  }
  return out;
}

std::vector<Aabb> RegularTriangulation::cell_bounds(const Aabb& clip) const {
  std::vector<Aabb> box(points_.size());
  std::vector<char> unbounded(points_.size(), 0);
  for (const Tet& t : tets_) {
    if (!t.alive) continue;
    bool has_super = false;
    for (int v : t.v) has_super = has_super || is_super(v);
    Vec3 center = Vec3::Zero();
    bool ok = !has_super;
    if (ok) {
      const WeightedPoint& a = points_[t.v[0]];
      const double ha = a.p.squaredNorm() - a.weight;
      Eigen::Matrix3d m;
      Vec3 rhs;
      for (int k = 1; k < 4; ++k) {
        const WeightedPoint& b = points_[t.v[k]];
        m.row(k - 1) = 2.0 * (b.p - a.p).transpose();
        rhs[k - 1] = (b.p.squaredNorm() - b.weight) - ha;
      }
      const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
      ok = lu.isInvertible();
      if (ok) {
        center = lu.solve(rhs);
        ok = center.allFinite();
      }
    }
    for (int v : t.v) {
      if (is_super(v)) continue;
      if (ok) {
        box[v].extend(center);
      } else {
        unbounded[v] = 1;
      }
    }
  }
  std::vector<Aabb> out(internal_.size());
  for (std::size_t id = 0; id < internal_.size(); ++id) {
    const int v = internal_[id];
    if (v < 0 || hidden_[v]) continue;
    if (unbounded[v]) {
      out[id] = clip;
      continue;
    }
    Aabb b;
    b.lo = box[v].lo.cwiseMax(clip.lo);
    b.hi = box[v].hi.cwiseMin(clip.hi);
    out[id] = b;
  }
  return out;
}

std::vector<std::array<Index, 4>> RegularTriangulation::finite_tets() const {
  std::vector<std::array<Index, 4>> out;
  for (const Tet& t : tets_) {
    if (!t.alive) continue;
    bool real = true;
    for (int v : t.v) real = real && !is_super(v);
    if (real) out.push_back({external_[t.v[0]], external_[t.v[1]], external_[t.v[2]], external_[t.v[3]]});
  }
  return out;
}

}  // namespace mattopo
