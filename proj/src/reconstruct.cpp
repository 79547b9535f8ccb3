#include "mattopo/reconstruct.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "mattopo/geom.h"
#include "mattopo/parallel.h"

namespace mattopo {

Aabb TriangleMesh::bounds() const {
  Aabb box;
  for (const Vec3& v : vertices) box.extend(v);
  return box;
}

double TriangleMesh::area() const {
  double a = 0.0;
  for (const auto& t : tris) a += triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  return a;
}

namespace {

std::map<std::array<Index, 2>, int> edge_counts(const TriangleMesh& m) {
  std::map<std::array<Index, 2>, int> count;
  for (const auto& t : m.tris)
    for (int k = 0; k < 3; ++k) {
      std::array<Index, 2> e = {t[k], t[(k + 1) % 3]};
      if (e[0] > e[1]) std::swap(e[0], e[1]);
      ++count[e];
    }
  return count;
}

}  // namespace

int TriangleMesh::euler() const {
  std::vector<char> used(vertices.size(), 0);
  for (const auto& t : tris)
    for (Index v : t) used[v] = 1;
  const int V = static_cast<int>(std::count(used.begin(), used.end(), 1));
  return V - static_cast<int>(edge_counts(*this).size()) + static_cast<int>(tris.size());
}

bool TriangleMesh::watertight() const {
  for (const auto& [e, n] : edge_counts(*this))
    if (n != 2) return false;
  return true;
}

int TriangleMesh::components() const {
  UnionFind uf(vertices.size());
  std::vector<char> used(vertices.size(), 0);
  for (const auto& t : tris) {
    uf.unite(t[0], t[1]);
    uf.unite(t[1], t[2]);
    for (Index v : t) used[v] = 1;
  }
  int n = 0;
  for (std::size_t v = 0; v < vertices.size(); ++v)
    if (used[v] && uf.find(static_cast<int>(v)) == static_cast<int>(v)) ++n;
  return n;
}

TriangleMesh surface_of(const TetMesh& mesh) {
  TriangleMesh out;
  std::vector<Index> remap(mesh.vertices.size(), kInvalidIndex);
  for (const SurfaceTri& st : mesh.surface_tris) {
    std::array<Index, 3> t;
    for (int k = 0; k < 3; ++k) {
      Index& r = remap[st.v[k]];
      if (r == kInvalidIndex) {
        r = static_cast<Index>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[st.v[k]]);
      }
      t[k] = r;
    }
    out.tris.push_back(t);
  }
  return out;
}

namespace {

constexpr int kBlock = 8;
constexpr int kSub = 2;

// Six tets of the Kuhn split of a cube; corners are indexed by x | y<<1 | z<<2.
constexpr int kKuhn[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};

struct EdgeKey {
  std::int64_t a, b;
  bool operator==(const EdgeKey& o) const { return a == o.a && b == o.b; }
};
struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const {
    return std::hash<std::int64_t>()(k.a * 0x9E3779B97F4A7C15LL ^ k.b);
  }
};

struct BlockOutput {
  std::vector<std::array<EdgeKey, 3>> tris;
  std::vector<std::array<Vec3, 3>> points;
};

}  // namespace

TriangleMesh reconstruct_envelope(const MedialMesh& mm, const SphereSet& spheres, int resolution, int threads,
                                  ReconstructStats* stats) {
  if (resolution < 2) throw Error("medial_mesh", "reconstruction resolution must be at least 2");
  TriangleMesh out;
  const EnvelopeIndex index(spheres, envelope_primitives(mm));
  if (index.empty()) return out;
  const Aabb box = index.bounds();
  const double h = box.extent().maxCoeff() / resolution;
  if (!(h > 0.0)) return out;
  const Vec3 origin = box.lo - Vec3::Constant(2.0 * h);
  std::array<int, 3> n;
  for (int a = 0; a < 3; ++a) n[a] = static_cast<int>(std::ceil(box.extent()[a] / h)) + 4;

  ReconstructStats st;
  st.grid = n;
  st.cell = h;
  for (Index v : mm.vertices)
    if (spheres[v].radius > 0.0 && spheres[v].radius < 2.0 * h) ++st.thin_spheres;
  if (st.thin_spheres > 0)
    spdlog::warn("reconstruction: {} spheres have radius below two grid cells", st.thin_spheres);

  const std::array<int, 3> nb = {(n[0] + kBlock - 1) / kBlock, (n[1] + kBlock - 1) / kBlock,
                                 (n[2] + kBlock - 1) / kBlock};
  const std::size_t num_blocks = static_cast<std::size_t>(nb[0]) * nb[1] * nb[2];
  st.blocks_total = num_blocks;
  const std::int64_t sx = n[0] + 1, sy = n[1] + 1;
  auto gid = [&](int i, int j, int k) { return static_cast<std::int64_t>(i) + sx * (j + sy * static_cast<std::int64_t>(k)); };

  std::vector<BlockOutput> blocks(num_blocks);
  std::atomic<std::size_t> evaluated{0};
  parallel_for(num_blocks, threads, [&](std::size_t b) {
    const int bi = static_cast<int>(b % nb[0]);
    const int bj = static_cast<int>((b / nb[0]) % nb[1]);
    const int bk = static_cast<int>(b / (static_cast<std::size_t>(nb[0]) * nb[1]));
    const int i0 = bi * kBlock, j0 = bj * kBlock, k0 = bk * kBlock;
    const int ni = std::min(kBlock, n[0] - i0), nj = std::min(kBlock, n[1] - j0), nk = std::min(kBlock, n[2] - k0);
    const Vec3 lo = origin + h * Vec3(i0, j0, k0);
    const Vec3 ext = h * Vec3(ni, nj, nk);
    const double fc = index.signed_distance(lo + 0.5 * ext);
    if (std::abs(fc) > 0.5 * ext.norm()) return;
    ++evaluated;

    // The field is 1-Lipschitz, so a primitive farther than fc + 2 rho at a
    // centre never attains the minimum inside the surrounding box.
    const Vec3 c = lo + 0.5 * ext;
    const double limit = fc + ext.norm();
    std::vector<std::pair<Index, double>> near;
    index.for_each_candidate(c, limit, [&](Index p, double d) {
      if (d <= limit) near.emplace_back(p, d);
    });
    const int vi = ni + 1, vj = nj + 1;
    std::vector<double> f(static_cast<std::size_t>(vi) * vj * (nk + 1));
    BlockOutput& bo = blocks[b];
    auto march = [&](int i, int j, int k) {
      double cf[8];
      std::int64_t cg[8];
      Vec3 cp[8];
      for (int c = 0; c < 8; ++c) {
        const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        cf[c] = f[(i + di) + vi * ((j + dj) + vj * (k + dk))];
        cg[c] = gid(i0 + i + di, j0 + j + dj, k0 + k + dk);
        cp[c] = origin + h * Vec3(i0 + i + di, j0 + j + dj, k0 + k + dk);
      }
      bool any_in = false, any_out = false;
      for (double v : cf) (v < 0.0 ? any_in : any_out) = true;
      if (!any_in || !any_out) return;
      for (const auto& tet : kKuhn) {
        int in[4], out_[4], n_in = 0, n_out = 0;
        for (int c : tet) (cf[c] < 0.0 ? in[n_in++] : out_[n_out++]) = c;
        if (n_in == 0 || n_out == 0) continue;
        auto cross = [&](int a, int c, EdgeKey& key) {
          key = cg[a] < cg[c] ? EdgeKey{cg[a], cg[c]} : EdgeKey{cg[c], cg[a]};
          const double t = cf[a] / (cf[a] - cf[c]);
          // Interpolate from the lower grid id so both blocks agree bitwise.
          if (cg[a] < cg[c]) return Vec3(cp[a] + t * (cp[c] - cp[a]));
          const double s = cf[c] / (cf[c] - cf[a]);
          return Vec3(cp[c] + s * (cp[a] - cp[c]));
        };
        auto emit = [&](int a0, int c0, int a1, int c1, int a2, int c2) {
          std::array<EdgeKey, 3> keys;
          std::array<Vec3, 3> pts = {cross(a0, c0, keys[0]), cross(a1, c1, keys[1]), cross(a2, c2, keys[2])};
          // Orient along the outward gradient (from inside to outside).
          Vec3 grad = Vec3::Zero();
          for (int q = 0; q < n_out; ++q) grad += cp[out_[q]];
          for (int q = 0; q < n_in; ++q) grad -= cp[in[q]] * (static_cast<double>(n_out) / n_in);
          if ((pts[1] - pts[0]).cross(pts[2] - pts[0]).dot(grad) < 0.0) {
            std::swap(keys[1], keys[2]);
            std::swap(pts[1], pts[2]);
          }
          bo.tris.push_back(keys);
          bo.points.push_back(pts);
        };
        if (n_in == 1) {
          emit(in[0], out_[0], in[0], out_[1], in[0], out_[2]);
        } else if (n_in == 3) {
          emit(out_[0], in[0], out_[0], in[1], out_[0], in[2]);
        } else {
          emit(in[0], out_[0], in[0], out_[1], in[1], out_[1]);
          emit(in[0], out_[0], in[1], out_[1], in[1], out_[0]);
        }
      }
    };

    std::vector<Index> local;
    for (int sk = 0; sk < nk; sk += kSub)
      for (int sj = 0; sj < nj; sj += kSub)
        for (int si = 0; si < ni; si += kSub) {
          const int mi = std::min(kSub, ni - si), mj = std::min(kSub, nj - sj), mk = std::min(kSub, nk - sk);
          const Vec3 slo = origin + h * Vec3(i0 + si, j0 + sj, k0 + sk);
          const Vec3 sext = h * Vec3(mi, mj, mk);
          const Vec3 sc = slo + 0.5 * sext;
          double fs = std::numeric_limits<double>::infinity();
          std::vector<double> ds(near.size());
          for (std::size_t q = 0; q < near.size(); ++q) {
            ds[q] = index.signed_distance(sc, near[q].first);
            fs = std::min(fs, ds[q]);
          }
          if (std::abs(fs) > 0.5 * sext.norm()) continue;
          local.clear();
          for (std::size_t q = 0; q < near.size(); ++q)
            if (ds[q] <= fs + sext.norm()) local.push_back(near[q].first);
          for (int k = sk; k <= sk + mk; ++k)
            for (int j = sj; j <= sj + mj; ++j)
              for (int i = si; i <= si + mi; ++i) {
                const Vec3 x = origin + h * Vec3(i0 + i, j0 + j, k0 + k);
                double v = std::numeric_limits<double>::infinity();
                for (Index p : local) v = std::min(v, index.signed_distance(x, p));
                f[i + vi * (j + vj * k)] = v;
              }
          for (int k = sk; k < sk + mk; ++k)
            for (int j = sj; j < sj + mj; ++j)
              for (int i = si; i < si + mi; ++i) march(i, j, k);
        }
  });
  st.blocks_evaluated = evaluated.load();

  std::unordered_map<EdgeKey, Index, EdgeKeyHash> vertex_of;
  for (const BlockOutput& bo : blocks) {
    for (std::size_t t = 0; t < bo.tris.size(); ++t) {
      std::array<Index, 3> tri;
      for (int q = 0; q < 3; ++q) {
        auto [it, fresh] = vertex_of.emplace(bo.tris[t][q], static_cast<Index>(out.vertices.size()));
        if (fresh) out.vertices.push_back(bo.points[t][q]);
        tri[q] = it->second;
      }
      out.tris.push_back(tri);
    }
  }
  if (stats) *stats = st;
  return out;
}

std::vector<Vec3> sample_triangle_mesh(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<Vec3> out;
  if (mesh.tris.empty() || count == 0) return out;
  std::vector<double> cum(mesh.tris.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& tri = mesh.tris[t];
    total += triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    cum[t] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double x = U(rng) * total;
    std::size_t t = std::upper_bound(cum.begin(), cum.end(), x) - cum.begin();
    t = std::min(t, cum.size() - 1);
    double u = U(rng), v = U(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const auto& tri = mesh.tris[t];
    const Vec3& a = mesh.vertices[tri[0]];
    out.push_back(a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a));
  }
  return out;
}

namespace {

double one_sided(const TriangleMesh& from, const TriangleMesh& to, std::size_t samples, std::uint64_t seed,
                 int threads) {
  if (from.tris.empty() || to.tris.empty()) throw Error("medial_mesh", "hausdorff needs two nonempty meshes");
  std::vector<Vec3> pts = sample_triangle_mesh(from, samples, seed);
  std::vector<char> used(from.vertices.size(), 0);
  for (const auto& t : from.tris)
    for (Index v : t) used[v] = 1;
  for (std::size_t v = 0; v < from.vertices.size(); ++v)
    if (used[v]) pts.push_back(from.vertices[v]);
  const SurfaceIndex index(to.vertices, to.tris);
  std::vector<double> d(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) { d[i] = index.nearest(pts[i]).distance; });
  return *std::max_element(d.begin(), d.end());
}

}  // namespace

HausdorffResult hausdorff(const TriangleMesh& a, const TriangleMesh& b, std::size_t samples, std::uint64_t seed,
                          int threads) {
  const double diag = a.bounds().diagonal();
  if (!(diag > 0.0)) throw Error("medial_mesh", "hausdorff reference mesh is degenerate");
  HausdorffResult r;
  r.eps1 = one_sided(a, b, samples, seed, threads) / diag * 100.0;
  r.eps2 = one_sided(b, a, samples, seed + 1, threads) / diag * 100.0;
  r.eps_max = std::max(r.eps1, r.eps2);
  return r;
}

}  // namespace mattopo
