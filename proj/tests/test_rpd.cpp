#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mattopo/features.h"
#include "mattopo/regular_triangulation.h"
#include "support.h"

using namespace mattopo;
using namespace mattopo::testing;

namespace {

TetMesh unit_cube() {
  RawTetMesh raw = shapes::cube_five_tets();
  return build_tet_mesh(raw.vertices, raw.tets, false);
}

RpdOptions exact_weights() {
  RpdOptions o;
  o.weight_jitter = 0.0;
  return o;
}

bool cell_contains(const ConvexCell& cell, const Vec3& p, double eps) {
  if (cell.empty()) return false;
  for (int k = 0; k < static_cast<int>(cell.planes().size()); ++k)
    if (cell.plane_used(k) && cell.planes()[k].eval(p) < -eps) return false;
  return true;
}

}  // namespace

void check_invariants(const std::string& name);

TEST_CASE("radical plane") {
  const MedialSphere a = sphere_at(Vec3::Zero(), 1.0);
  const MedialSphere b = sphere_at(Vec3(2, 0, 0), 1.0);
  const MedialSphere c = sphere_at(Vec3(2, 0, 0), 0.0);
  SUBCASE("equal radii bisect the centres") {
    const CellPlane p = radical_plane(a, b);
    CHECK(std::abs(p.eval(Vec3(1, 3, -2))) < 1e-15);
    CHECK(p.eval(Vec3::Zero()) > 0.0);
  }
  SUBCASE("unequal radii shift towards the smaller sphere") {
    const CellPlane p = radical_plane(a, c);
    CHECK(std::abs(p.eval(Vec3(1.25, 0.5, 7))) < 1e-15);
  }
  SUBCASE("swapping the pair negates the plane exactly") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 100; ++i) {
      MedialSphere x = sphere_at(Vec3(u(rng), u(rng), u(rng)), std::abs(u(rng)));
      MedialSphere y = sphere_at(Vec3(u(rng), u(rng), u(rng)), std::abs(u(rng)));
      x.id = 3;
      y.id = 8;
      for (double jitter : {0.0, 1e-6}) {
        const CellPlane p = radical_plane(x, y, jitter);
        const CellPlane q = radical_plane(y, x, jitter);
        CHECK(p.n == -q.n);
        CHECK(p.d == -q.d);
        CHECK(p.tag == y.id);
        CHECK(q.tag == x.id);
      }
    }
  }
  SUBCASE("coincident centres are an error") { CHECK_THROWS_AS(radical_plane(a, a), Error); }
  SUBCASE("jitter only shifts the weight") {
    MedialSphere x = a;
    x.id = 5;
    CHECK(power_weight(x, 0.0) == 1.0);
    const double w = power_weight(x, 1e-3);
    CHECK(w >= 1.0);
    CHECK(w < 1.0 + 1e-3);
  }
}

TEST_CASE("power cell neighbours") {
  Aabb box;
  box.extend(Vec3(-10, -10, -10));
  box.extend(Vec3(10, 10, 10));
  SUBCASE("two spheres are neighbours") {
    RegularTriangulation rt(box);
    CHECK(rt.insert(0, Vec3(0, 0, 0), 1.0));
    CHECK(rt.insert(1, Vec3(2, 0, 0), 1.0));
    const auto n = rt.neighbor_sets();
    CHECK(n[0] == std::vector<Index>{1});
    CHECK(n[1] == std::vector<Index>{0});
  }
  SUBCASE("regular tet vertices form a complete graph") {
    RegularTriangulation rt(box);
    const std::array<Vec3, 4> p = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
    for (Index i = 0; i < 4; ++i) rt.insert(i, p[i], 0.5);
    const auto n = rt.neighbor_sets();
    for (Index i = 0; i < 4; ++i) {
      std::vector<Index> expect;
      for (Index j = 0; j < 4; ++j)
        if (j != i) expect.push_back(j);
      CHECK(n[i] == expect);
    }
  }
  SUBCASE("a dominated sphere is hidden") {
    RegularTriangulation rt(box);
    const std::array<Vec3, 4> p = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
    for (Index i = 0; i < 4; ++i) rt.insert(i, p[i], 16.0);
    CHECK(!rt.insert(4, Vec3::Zero(), 0.0));
    CHECK(rt.is_hidden(4));
  }
  SUBCASE("every brute-force adjacency is a triangulation adjacency") {
    TetMesh mesh = fixture("cube");
    SurfaceIndex surface(mesh);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SphereSet set = random_spheres(mesh, surface, 15, seed);
      RpdEngine rpd(mesh);
      rpd.update(set);
      const auto brute = brute_force_neighbors(set, mesh.bbox, 1e-6 * mesh.bbox_diag * mesh.bbox_diag,
                                               rpd.weight_jitter());
      for (Index i = 0; i < static_cast<Index>(set.size()); ++i) {
        if (rpd.is_hidden(i)) continue;
        for (Index j : brute[i]) CHECK(std::binary_search(rpd.neighbors(i).begin(), rpd.neighbors(i).end(), j));
      }
    }
  }
}

TEST_CASE("tet relation filter") {
  TetMesh mesh = fixture("cube");
  SUBCASE("a single sphere relates to every tet") {
    SphereSet set;
    set.add(sphere_at(mesh.bbox.center(), 100.0));
    RpdEngine rpd(mesh);
    rpd.update(set);
    CHECK(rpd.related_tets(0).size() == mesh.tets.size());
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) CHECK(rpd.tet_relates_to_sphere(set, 0, {}, t));
  }
  SUBCASE("a tet entirely on the far side of the radical plane is rejected") {
    SphereSet set;
    set.add(sphere_at(Vec3(100, 500, 500), 50.0));
    set.add(sphere_at(Vec3(900, 500, 500), 50.0));
    RpdEngine rpd(mesh, exact_weights());
    rpd.update(set);
    int rejected = 0;
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
      bool far = true;
      for (Index v : mesh.tets[t]) far = far && mesh.vertices[v].x() > 500.0 + 1e-6;
      if (far) {
        CHECK(!rpd.tet_relates_to_sphere(set, 0, {1}, t));
        ++rejected;
      }
    }
    CHECK(rejected > 0);
  }
  SUBCASE("never rejects a tet the brute-force cell intersects") {
    SurfaceIndex surface(mesh);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      SphereSet set = random_spheres(mesh, surface, 12, seed);
      RpdEngine rpd(mesh);
      rpd.update(set);
      for (Index s = 0; s < static_cast<Index>(set.size()); ++s) {
        const auto& rel = rpd.related_tets(s);
        for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
          const ConvexCell cell = brute_force_cell(mesh, set, s, t, rpd.weight_jitter());
          if (cell.empty() || cell.volume() <= 1e-9 * mesh.tet_volume(t)) continue;
          CHECK(std::binary_search(rel.begin(), rel.end(), t));
        }
      }
    }
  }
}

TEST_CASE("clipping") {
  TetMesh mesh = unit_cube();
  SUBCASE("two equal spheres split the cube in half") {
    SphereSet set;
    set.add(sphere_at(Vec3(0.25, 0.5, 0.5), 0.2));
    set.add(sphere_at(Vec3(0.75, 0.5, 0.5), 0.2));
    RpdEngine rpd(mesh, exact_weights());
    rpd.update(set);
    CHECK(rpd.sphere_volume(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rpd.sphere_volume(1) == doctest::Approx(0.5).epsilon(1e-12));
    for (const RpdCell& c : rpd.cells(0))
      for (const CellVertex& v : c.cell.vertices()) CHECK(v.pos.x() <= 0.5 + 1e-12);
  }
  SUBCASE("plane missing the tet leaves it unchanged, plane covering it empties it") {
    ConvexCell cell = ConvexCell::from_tet({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)});
    const double v0 = cell.volume();
    CellPlane keep{Vec3(1, 0, 0), 5.0, 0};
    CHECK(cell.clip(keep) == ClipOutcome::kUnchanged);
    CHECK(cell.volume() == v0);
    CellPlane cut{Vec3(-1, 0, 0), 0.5, 1};
    CHECK(cell.clip(cut) == ClipOutcome::kClipped);
    CHECK(cell.volume() == doctest::Approx(v0 - std::pow(0.5, 3) / 6.0));
    CellPlane none{Vec3(1, 0, 0), -5.0, 2};
    CHECK(cell.clip(none) == ClipOutcome::kEmpty);
    CHECK(cell.empty());
  }
  SUBCASE("a hidden sphere owns nothing") {
    SphereSet set;
    const Vec3 c(0.5, 0.5, 0.5);
    const std::array<Vec3, 4> p = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
    for (const Vec3& d : p) set.add(sphere_at(c + 0.2 * d, 0.6));
    set.add(sphere_at(c, 0.0));
    RpdEngine rpd(mesh, exact_weights());
    rpd.update(set);
    CHECK(rpd.is_hidden(4));
    CHECK(rpd.cells(4).empty());
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
      const ConvexCell cell = brute_force_cell(mesh, set, 4, t);
      CHECK((cell.empty() || cell.volume() < 1e-12));
    }
    CHECK(rpd.total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

void check_invariants(const std::string& name) {
  CAPTURE(name);
  TetMesh mesh = fixture(name);
  SurfaceIndex surface(mesh);
  SphereSet set = random_spheres(mesh, surface, 30, 17);
  RpdEngine rpd(mesh);
  rpd.update(set);

  CHECK(rpd.total_volume() == doctest::Approx(mesh.total_volume()).epsilon(1e-9));
  std::vector<double> per_tet(mesh.tets.size(), 0.0);
  for (Index s = 0; s < static_cast<Index>(set.size()); ++s)
    for (const RpdCell& c : rpd.cells(s)) per_tet[c.tet] += c.volume;
  for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t)
    CHECK(per_tet[t] == doctest::Approx(mesh.tet_volume(t)).epsilon(1e-6));

  for (Index s = 0; s < static_cast<Index>(set.size()); ++s)
    for (const RpdCell& c : rpd.cells(s))
      for (const CellVertex& v : c.cell.vertices())
        for (Index j : rpd.neighbors(s)) CHECK(rpd.plane(set, s, j).eval(v.pos) >= -2.0 * rpd.eps_clip());

  VolumeSampler sampler(mesh);
  std::mt19937_64 rng(4);
  int inside = 0;
  const int n = 5000;
  for (int k = 0; k < n; ++k) {
    const auto [p, t] = sampler(rng);
    const Index s = power_nearest_sphere(set, p);
    bool found = false;
    for (const RpdCell& c : rpd.cells(s))
      if (c.tet == t && cell_contains(c.cell, p, 1e-6 * mesh.bbox_diag)) found = true;
    inside += found;
  }
  CHECK(inside >= static_cast<int>(0.999 * n));
}

TEST_CASE("cells partition the volume, stay convex and contain their points") {
  for (const std::string name : {"ball", "cube", "torus", "lblock"}) check_invariants(name);
}

TEST_CASE("equal radii behave like zero radii") {
  TetMesh mesh = fixture("torus");
  SurfaceIndex surface(mesh);
  SphereSet a = random_spheres(mesh, surface, 25, 5);
  SphereSet b = a;
  for (Index s = 0; s < static_cast<Index>(a.size()); ++s) {
    a[s].radius = 37.0;
    b[s].radius = 0.0;
  }
  RpdEngine ra(mesh), rb(mesh);
  ra.update(a);
  rb.update(b);
  for (Index s = 0; s < static_cast<Index>(a.size()); ++s)
    CHECK(std::abs(ra.sphere_volume(s) - rb.sphere_volume(s)) <= 1e-9 * mesh.total_volume());
}

TEST_CASE("partial updates") {
  TetMesh mesh = fixture("torus");
  SurfaceIndex surface(mesh);
  SUBCASE("an update without new spheres changes nothing") {
    SphereSet set = random_spheres(mesh, surface, 10, 3);
    RpdEngine rpd(mesh);
    rpd.update(set);
    const double v = rpd.sphere_volume(2);
    CHECK(rpd.update(set).empty());
    CHECK(rpd.sphere_volume(2) == v);
  }
  SUBCASE("incremental insertion matches a full recompute") {
    SphereSet all = random_spheres(mesh, surface, 30, 8);
    SphereSet grow(all.dedup_radius());
    for (Index s = 0; s < 10; ++s) grow.add(all[s]);
    RpdEngine inc(mesh);
    inc.update(grow);
    for (Index s = 10; s < 30; ++s) {
      grow.add(all[s]);
      const auto dirty = inc.update(grow);
      CHECK(std::find(dirty.begin(), dirty.end(), s) != dirty.end());
    }
    RpdEngine full(mesh);
    full.update(grow);
    for (Index s = 0; s < 30; ++s) {
      CHECK(std::abs(inc.sphere_volume(s) - full.sphere_volume(s)) <= 1e-12 * mesh.total_volume());
      CHECK(inc.neighbors(s) == full.neighbors(s));
    }
  }
  SUBCASE("spheres away from the insertion keep their cells") {
    SphereSet set = random_spheres(mesh, surface, 20, 12);
    RpdEngine rpd(mesh);
    rpd.update(set);
    std::vector<std::vector<Index>> before_nbrs = rpd.neighbors();
    std::vector<double> before(set.size());
    for (Index s = 0; s < static_cast<Index>(set.size()); ++s) before[s] = rpd.sphere_volume(s);
    set.add(sphere_at(tet_centroid(mesh, 0), 1.0));
    const auto dirty = rpd.update(set);
    for (Index s = 0; s < static_cast<Index>(before.size()); ++s) {
      if (std::find(dirty.begin(), dirty.end(), s) != dirty.end()) continue;
      CHECK(rpd.neighbors(s) == before_nbrs[s]);
      CHECK(rpd.sphere_volume(s) == before[s]);
    }
  }
}
