#include "mattopo/medial_mesh.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

namespace mattopo {

namespace {

template <std::size_t N>
void sort_unique(std::vector<std::array<Index, N>>& v) {
  for (auto& s : v) std::sort(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <std::size_t N>
bool contains(const std::vector<std::array<Index, N>>& sorted, const std::array<Index, N>& s) {
  return std::binary_search(sorted.begin(), sorted.end(), s);
}

}  // namespace

int MedialMesh::euler() const {
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(faces.size()) -
         static_cast<int>(tets.size());
}

int MedialMesh::components() const {
  std::map<Index, int> local;
  for (Index v : vertices) local.emplace(v, static_cast<int>(local.size()));
  UnionFind uf(vertices.size());
  for (const auto& e : edges) uf.unite(local.at(e[0]), local.at(e[1]));
  return uf.components();
}

bool MedialMesh::closed() const {
  for (const auto& e : edges)
    for (Index v : e)
      if (!std::binary_search(vertices.begin(), vertices.end(), v)) return false;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) {
      std::array<Index, 2> e = {f[k], f[(k + 1) % 3]};
      std::sort(e.begin(), e.end());
      if (!contains(edges, e)) return false;
    }
  for (const auto& t : tets)
    for (int k = 0; k < 4; ++k) {
      std::array<Index, 3> f;
      int n = 0;
      for (int m = 0; m < 4; ++m)
        if (m != k) f[n++] = t[m];
      if (!contains(faces, f)) return false;
    }
  return true;
}

MedialMesh extract_dual(const std::vector<RestrictedElements>& elements) {
  MedialMesh mm;
  for (const RestrictedElements& R : elements) {
    if (R.empty()) continue;
    const Index i = R.sphere;
    mm.vertices.push_back(i);
    for (const auto& [j, st] : R.rpf)
      if (i < j) mm.edges.push_back({i, j});
    for (const auto& [key, st] : R.rpe)
      if (i < key.first) mm.faces.push_back({i, key.first, key.second});
    for (const auto& [key, st] : R.rpv)
      if (i < key[0]) mm.tets.push_back({i, key[0], key[1], key[2]});
  }
  std::sort(mm.vertices.begin(), mm.vertices.end());
  sort_unique(mm.edges);
  sort_unique(mm.faces);
  sort_unique(mm.tets);
  return mm;
}

MedialMesh thin_medial_mesh(MedialMesh mm, const SphereSet& spheres) {
  if (mm.tets.empty()) return mm;
  auto min_radius = [&](const std::array<Index, 4>& t) {
    double r = spheres[t[0]].radius;
    for (Index s : t) r = std::min(r, spheres[s].radius);
    return r;
  };
  std::vector<std::array<Index, 4>> order = mm.tets;
  std::stable_sort(order.begin(), order.end(),
                   [&](const auto& a, const auto& b) { return min_radius(a) < min_radius(b); });

  auto faces_of = [](const std::array<Index, 4>& t) {
    std::array<std::array<Index, 3>, 4> f;
    for (int k = 0; k < 4; ++k) {
      int n = 0;
      for (int m = 0; m < 4; ++m)
        if (m != k) f[k][n++] = t[m];
    }
    return f;
  };
  std::map<std::array<Index, 3>, int> face_use;
  for (const auto& t : order)
    for (const auto& f : faces_of(t)) ++face_use[f];

  std::vector<char> alive(order.size(), 1);
  std::vector<std::array<Index, 3>> removed_faces;
  std::size_t remaining = order.size();
  while (remaining > 0) {
    bool progress = false;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (!alive[k]) continue;
      // Free face: the face shared by no other remaining tet, preferring the
      // one opposite the largest sphere.
      int best = -1;
      double best_r = -1.0;
      const auto fs = faces_of(order[k]);
      for (int m = 0; m < 4; ++m) {
        if (face_use[fs[m]] != 1) continue;
        const double r = spheres[order[k][m]].radius;
        if (r > best_r) {
          best_r = r;
          best = m;
        }
      }
      if (best < 0) continue;
      alive[k] = 0;
      --remaining;
      for (const auto& f : fs) --face_use[f];
      removed_faces.push_back(fs[best]);
      ++mm.tets_pruned;
      progress = true;
    }
    if (!progress) {
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (!alive[k]) continue;
        alive[k] = 0;
        --remaining;
        for (const auto& f : faces_of(order[k])) --face_use[f];
        ++mm.tets_pruned;
        ++mm.tets_forced;
        spdlog::warn("thinning: dual tet ({}, {}, {}, {}) has no free face", order[k][0], order[k][1],
                     order[k][2], order[k][3]);
        break;
      }
    }
  }
  std::sort(removed_faces.begin(), removed_faces.end());
  std::vector<std::array<Index, 3>> kept;
  for (const auto& f : mm.faces)
    if (!std::binary_search(removed_faces.begin(), removed_faces.end(), f)) kept.push_back(f);
  mm.faces = std::move(kept);
  mm.tets.clear();
  return mm;
}

std::string ma_string(const MedialMesh& mm, const SphereSet& spheres, const Normalization* denorm) {
  std::map<Index, int> local;
  for (Index v : mm.vertices) local.emplace(v, static_cast<int>(local.size()));
  std::ostringstream os;
  char buf[160];
  os << mm.vertices.size() << ' ' << mm.edges.size() << ' ' << mm.faces.size() << '\n';
  for (Index v : mm.vertices) {
    const MedialSphere& s = spheres[v];
    const Vec3 c = denorm ? denorm->to_original(s.center) : s.center;
    const double r = denorm ? denorm->length_to_original(s.radius) : s.radius;
    std::snprintf(buf, sizeof(buf), "v %.12g %.12g %.12g %.12g\n", c.x(), c.y(), c.z(), r);
    os << buf;
  }
  for (const auto& e : mm.edges) os << "e " << local.at(e[0]) << ' ' << local.at(e[1]) << '\n';
  for (const auto& f : mm.faces)
    os << "f " << local.at(f[0]) << ' ' << local.at(f[1]) << ' ' << local.at(f[2]) << '\n';
  return os.str();
}

void write_ma(const std::string& path, const MedialMesh& mm, const SphereSet& spheres,
              const Normalization* denorm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("medial_mesh", "cannot write " + path);
  out << ma_string(mm, spheres, denorm);
  if (!out) throw Error("medial_mesh", "write failed for " + path);
}

MaFile read_ma(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("medial_mesh", "cannot open " + path);
  MaFile ma;
  std::size_t nv = 0, ne = 0, nf = 0;
  if (!(in >> nv >> ne >> nf)) throw Error("medial_mesh", "bad .ma header in " + path);
  std::string tag;
  while (in >> tag) {
    if (tag == "v") {
      Vec3 c;
      double r;
      in >> c.x() >> c.y() >> c.z() >> r;
      ma.centers.push_back(c);
      ma.radii.push_back(r);
    } else if (tag == "e") {
      std::array<Index, 2> e;
      in >> e[0] >> e[1];
      ma.edges.push_back(e);
    } else if (tag == "f") {
      std::array<Index, 3> f;
      in >> f[0] >> f[1] >> f[2];
      ma.faces.push_back(f);
    } else {
      throw Error("medial_mesh", "unknown .ma record '" + tag + "'");
    }
    if (!in) throw Error("medial_mesh", "truncated .ma record in " + path);
  }
  if (ma.centers.size() != nv || ma.edges.size() != ne || ma.faces.size() != nf)
    throw Error("medial_mesh", "record counts disagree with header in " + path);
  return ma;
}

}  // namespace mattopo
