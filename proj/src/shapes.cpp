#include "mattopo/shapes.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "mattopo/geom.h"

namespace mattopo::shapes {

namespace {

constexpr double kPi = 3.14159265358979323846;

void orient_positive(RawTetMesh& m) {
  for (auto& t : m.tets)
    if (signed_tet_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]) < 0)
      std::swap(t[2], t[3]);
}

// Kuhn split of the unit cube with corner index c = x + 2y + 4z.
const std::array<std::array<int, 4>, 6> kKuhnTets = {{
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}}};

struct Disk {
  std::vector<Eigen::Vector2d> points;
  std::vector<std::array<Index, 3>> tris;
};

Disk make_disk(double radius, int sectors, int rings) {
  Disk d;
  d.points.push_back(Eigen::Vector2d::Zero());
  for (int k = 1; k <= rings; ++k)
    for (int s = 0; s < sectors; ++s) {
      const double a = 2 * kPi * s / sectors;
      d.points.emplace_back(radius * k / rings * std::cos(a), radius * k / rings * std::sin(a));
    }
  auto id = [&](int ring, int s) { return static_cast<Index>(1 + (ring - 1) * sectors + (s % sectors)); };
  for (int s = 0; s < sectors; ++s) d.tris.push_back({0, id(1, s), id(1, s + 1)});
  for (int k = 2; k <= rings; ++k)
    for (int s = 0; s < sectors; ++s) {
      d.tris.push_back({id(k - 1, s), id(k, s), id(k, s + 1)});
      d.tris.push_back({id(k - 1, s), id(k, s + 1), id(k - 1, s + 1)});
    }
  return d;
}

// Sweeps a triangulated disk through `stations` placements. Prisms are split
// into three tets with the quad diagonals running from the lower-indexed
// section vertex on the bottom layer to the higher-indexed one on the top,
// which makes neighbouring prisms agree on every shared quad.
RawTetMesh sweep(const Disk& disk, int stations, bool closed,
                 const std::function<Vec3(int, const Eigen::Vector2d&)>& place) {
  RawTetMesh m;
  const Index np = static_cast<Index>(disk.points.size());
  for (int j = 0; j < stations; ++j)
    for (const auto& p : disk.points) m.vertices.push_back(place(j, p));
  const int layers = closed ? stations : stations - 1;
  for (int j = 0; j < layers; ++j) {
    const Index lo = j * np;
    const Index hi = ((j + 1) % stations) * np;
    for (auto tri : disk.tris) {
      std::sort(tri.begin(), tri.end());
      const auto [p, q, r] = tri;
      m.tets.push_back({lo + p, lo + q, lo + r, hi + r});
      m.tets.push_back({lo + p, lo + q, hi + q, hi + r});
      m.tets.push_back({lo + p, hi + p, hi + q, hi + r});
    }
  }
  orient_positive(m);
  return m;
}

}  // namespace

RawTetMesh single_tet() {
  RawTetMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0),
                Vec3(0.5, std::sqrt(3.0) / 6, std::sqrt(2.0 / 3.0))};
  m.tets = {{0, 1, 2, 3}};
  orient_positive(m);
  return m;
}

RawTetMesh cube_five_tets(double size) {
  RawTetMesh m;
  for (int c = 0; c < 8; ++c) m.vertices.emplace_back(size * (c & 1), size * ((c >> 1) & 1), size * ((c >> 2) & 1));
  m.tets = {{1, 2, 4, 7}, {0, 1, 2, 4}, {3, 1, 2, 7}, {5, 1, 4, 7}, {6, 2, 4, 7}};
  orient_positive(m);
  return m;
}

RawTetMesh voxel_solid(int nx, int ny, int nz, const std::function<bool(int, int, int)>& occupied) {
  RawTetMesh m;
  std::map<std::array<int, 3>, Index> ids;
  auto vid = [&](int x, int y, int z) {
    auto [it, fresh] = ids.emplace(std::array<int, 3>{x, y, z}, static_cast<Index>(m.vertices.size()));
    if (fresh) m.vertices.emplace_back(x, y, z);
    return it->second;
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!occupied(i, j, k)) continue;
        std::array<Index, 8> c{};
        for (int b = 0; b < 8; ++b) c[b] = vid(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        for (const auto& t : kKuhnTets) m.tets.push_back({c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
      }
  orient_positive(m);
  return m;
}

RawTetMesh box_grid(int nx, int ny, int nz, const Vec3& size) {
  RawTetMesh m = voxel_solid(nx, ny, nz, [](int, int, int) { return true; });
  for (Vec3& p : m.vertices) p = p.cwiseProduct(size).cwiseQuotient(Vec3(nx, ny, nz));
  return m;
}

RawTetMesh l_block(int n) {
  return voxel_solid(2 * n, 2 * n, n, [n](int i, int j, int) { return !(i >= n && j >= n); });
}

RawTetMesh u_shape(int n) {
  return voxel_solid(3 * n, 3 * n, n, [n](int i, int j, int) { return j < n || i < n || i >= 2 * n; });
}

RawTetMesh genus2_box(int n) {
  return voxel_solid(5 * n, 3 * n, n, [n](int i, int j, int) {
    const bool hole_row = j >= n && j < 2 * n;
    const bool hole1 = i >= n && i < 2 * n;
    const bool hole2 = i >= 3 * n && i < 4 * n;
    return !(hole_row && (hole1 || hole2));
  });
}

RawTetMesh ball(int n, double radius) {
  RawTetMesh m = box_grid(n, n, n, Vec3::Constant(2.0));
  for (Vec3& p : m.vertices) {
    const Vec3 q = p.array() - 1.0;
    const double x2 = q.x() * q.x(), y2 = q.y() * q.y(), z2 = q.z() * q.z();
    p = radius * Vec3(q.x() * std::sqrt(1 - y2 / 2 - z2 / 2 + y2 * z2 / 3),
                      q.y() * std::sqrt(1 - z2 / 2 - x2 / 2 + z2 * x2 / 3),
                      q.z() * std::sqrt(1 - x2 / 2 - y2 / 2 + x2 * y2 / 3));
  }
  orient_positive(m);
  return m;
}

RawTetMesh torus(double major_radius, double minor_radius, int segments, int sectors, int rings) {
  const Disk disk = make_disk(minor_radius, sectors, rings);
  return sweep(disk, segments, true, [&](int j, const Eigen::Vector2d& p) {
    const double a = 2 * kPi * j / segments;
    const double rad = major_radius + p.x();
    return Vec3(rad * std::cos(a), rad * std::sin(a), p.y());
  });
}

RawTetMesh cylinder(double radius, double height, int sectors, int rings, int layers) {
  const Disk disk = make_disk(radius, sectors, rings);
  return sweep(disk, layers + 1, false, [&](int j, const Eigen::Vector2d& p) {
    return Vec3(p.x(), p.y(), height * j / layers);
  });
}

RawTetMesh slab(double sx, double sy, double sz, int nx, int ny, int nz) {
  return box_grid(nx, ny, nz, Vec3(sx, sy, sz));
}

RawTetMesh by_name(const std::string& name) {
  if (name == "tet") return single_tet();
  if (name == "cube5") return cube_five_tets();
  if (name == "cube") return box_grid(4, 4, 4, Vec3::Ones());
  if (name == "lblock") return l_block();
  if (name == "ushape") return u_shape();
  if (name == "genus2") return genus2_box();
  if (name == "ball") return ball();
  if (name == "torus") return torus();
  if (name == "cylinder") return cylinder();
  if (name == "slab") return slab();
  throw Error("shapes", "unknown fixture '" + name + "'");
}

std::vector<std::string> names() {
  return {"tet", "cube5", "cube", "lblock", "ushape", "genus2", "ball", "torus", "cylinder", "slab"};
}

int ground_truth_euler(const std::string& name) {
  if (name == "torus") return 0;
  if (name == "genus2") return -1;
  by_name(name);
  return 1;
}

}  // namespace mattopo::shapes
