#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>

#include "mattopo/euler_payload.h"
#include "mattopo/features.h"
#include "support.h"

using namespace mattopo;
using namespace mattopo::testing;

namespace {

TopoFixParams fix_params(const TetMesh& mesh) {
  TopoFixParams p;
  p.shrink = ShrinkParams::for_diagonal(mesh.bbox_diag);
  return p;
}

// Shrunk sphere pinned at the surface sample with the largest x.
MedialSphere outermost_sphere(const TetMesh& mesh, const SurfaceIndex& surface) {
  const auto samples = sample_surface(mesh, 0.002, 1);
  const SurfaceSample* best = &samples[0];
  for (const SurfaceSample& s : samples)
    if (s.position.x() > best->position.x()) best = &s;
  return sphere_shrink(surface, best->position, best->normal, ShrinkParams::for_diagonal(mesh.bbox_diag));
}

struct FixRun {
  int rounds = 0;
  std::size_t spheres = 0;
  bool clean = false;
};

FixRun fix_until_clean(const TetMesh& mesh, SphereSet& set, int max_rounds) {
  SurfaceIndex surface(mesh);
  RpdEngine rpd(mesh);
  FixRun run;
  for (run.rounds = 0; run.rounds < max_rounds; ++run.rounds) {
    rpd.update(set);
    const auto elements = accumulate_euler(rpd);
    REQUIRE(conserved_euler(elements) == Rational(mesh_euler(mesh)));
    TopoReport report;
    const auto added = check_and_fix_topology(rpd, set, surface, fix_params(mesh), &report);
    if (report.empty()) {
      run.clean = true;
      break;
    }
    int inserted = 0;
    for (const MedialSphere& m : added) inserted += set.add(m) != kInvalidIndex;
    REQUIRE(inserted > 0);
  }
  run.spheres = set.active_count();
  return run;
}

// Connected components of the voxels whose centre lies in the solid and is
// power-nearest to sphere `s`.
int voxel_components(const std::function<bool(const Vec3&)>& inside, const Aabb& box, double h,
                     const SphereSet& set, Index s) {
  const Vec3 e = box.extent();
  const int nx = static_cast<int>(std::ceil(e.x() / h)), ny = static_cast<int>(std::ceil(e.y() / h)),
            nz = static_cast<int>(std::ceil(e.z() / h));
  auto id = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * ny + j) * nx + i; };
  std::vector<char> mark(static_cast<std::size_t>(nx) * ny * nz, 0);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Vec3 p = box.lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
        mark[id(i, j, k)] = inside(p) && power_nearest_sphere(set, p) == s;
      }
  int components = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (mark[id(i, j, k)] != 1) continue;
        ++components;
        std::deque<std::array<int, 3>> queue{{i, j, k}};
        mark[id(i, j, k)] = 2;
        while (!queue.empty()) {
          const auto [a, b, c] = queue.front();
          queue.pop_front();
          const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (const auto& o : d) {
            const int x = a + o[0], y = b + o[1], z = c + o[2];
            if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz || mark[id(x, y, z)] != 1) continue;
            mark[id(x, y, z)] = 2;
            queue.push_back({x, y, z});
          }
        }
      }
  return components;
}

}  // namespace

TEST_CASE("fractional payloads") {
  SUBCASE("single tet carries unit payloads") {
    TetMesh mesh = fixture("tet");
    const PayloadTable t = init_fractional_euler(mesh);
    for (const Rational& r : t.vertex) CHECK(r == Rational(1));
    for (const Rational& r : t.edge) CHECK(r == Rational(1));
    for (const Rational& r : t.face) CHECK(r == Rational(1));
    CHECK(signed_payload_sum(mesh, t) == Rational(1));
  }
  SUBCASE("five-tet cube sums to one") {
    TetMesh mesh = fixture("cube5");
    CHECK(signed_payload_sum(mesh, init_fractional_euler(mesh)) == Rational(1));
  }
  SUBCASE("elements shared by two tets carry one half") {
    RawTetMesh raw;
    raw.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
    raw.tets = {{0, 1, 2, 3}, {0, 2, 1, 4}};
    TetMesh mesh = build_tet_mesh(raw.vertices, raw.tets, false);
    const PayloadTable t = init_fractional_euler(mesh);
    for (Index f = 0; f < static_cast<Index>(mesh.faces.size()); ++f)
      CHECK(t.face[f] == (mesh.is_boundary_face(f) ? Rational(1) : Rational(1, 2)));
    CHECK(t.vertex[0] == Rational(1, 2));
    CHECK(t.vertex[3] == Rational(1));
    CHECK(signed_payload_sum(mesh, t) == Rational(1));
  }
  SUBCASE("payload sum equals the mesh Euler on every fixture") {
    for (const std::string& name : shapes::names()) {
      TetMesh mesh = fixture(name);
      CHECK(signed_payload_sum(mesh, init_fractional_euler(mesh)) == Rational(mesh_euler(mesh)));
    }
  }
}

TEST_CASE("payload inheritance under clipping") {
  const std::array<Vec3, 4> corners = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  SUBCASE("both halves of a cut tet are balls") {
    ConvexCell a = ConvexCell::from_tet(corners);
    ConvexCell b = ConvexCell::from_tet(corners);
    const Vec3 n = Vec3(1, 2, 3).normalized();
    a.clip(CellPlane{n, -0.3, 0});
    b.clip(CellPlane{-n, 0.3, 1});
    CHECK(a.euler() == Rational(1));
    CHECK(b.euler() == Rational(1));
    // The cut polygon is counted by both halves.
    CHECK(a.euler() + b.euler() - Rational(1) == Rational(1));
  }
  SUBCASE("new vertices take the edge payload, new edges the face payload") {
    std::array<Rational, 4> vp = {1, 1, 1, 1};
    std::array<Rational, 6> ep = {Rational(1, 2), 1, 1, 1, 1, 1};
    std::array<Rational, 4> fp = {1, 1, 1, Rational(1, 3)};
    ConvexCell cell = ConvexCell::from_tet(corners, vp, ep, fp);
    // Cuts off vertex 0, crossing edges 0-1, 0-2 and 0-3.
    cell.clip(CellPlane{Vec3(1, 1, 1).normalized(), -0.2, 0});
    const int P = static_cast<int>(cell.planes().size()) - 1;
    std::vector<Rational> created;
    for (const CellVertex& v : cell.vertices())
      if (v.has(P)) created.push_back(v.payload);
    REQUIRE(created.size() == 3);
    CHECK(std::count(created.begin(), created.end(), Rational(1, 2)) == 1);
    CHECK(std::count(created.begin(), created.end(), Rational(1)) == 2);
    // Face 3 (opposite vertex 3) holds vertices 0, 1 and 2.
    const int face3 = 3;
    CHECK(cell.edge_payload(face3, P) == Rational(1, 3));
    CHECK(cell.facet_payload(P) == Rational(1));
  }
}

TEST_CASE("restricted element Euler and components") {
  SUBCASE("a single sphere sees the topology of the whole shape") {
    for (const auto& [name, expect] : std::vector<std::pair<std::string, int>>{{"torus", 0}, {"ball", 1}, {"genus2", -1}}) {
      TetMesh mesh = fixture(name);
      SphereSet set;
      set.add(sphere_at(mesh.bbox.center() + Vec3(1, 2, 3), 10.0));
      RpdEngine rpd(mesh);
      rpd.update(set);
      const auto el = accumulate_euler(rpd);
      CHECK(el[0].rpc_euler == Rational(expect));
      CHECK(el[0].rpc_cc == 1);
    }
  }
  SUBCASE("two antipodal torus spheres share a face in two pieces") {
    TetMesh mesh = fixture("torus", false);
    SphereSet set;
    set.add(sphere_at(Vec3(2, 0, 0), 0.5));
    set.add(sphere_at(Vec3(-2, 0, 0), 0.5));
    RpdEngine rpd(mesh);
    rpd.update(set);
    const auto el = accumulate_euler(rpd);
    REQUIRE(el[0].rpf.count(1) == 1);
    CHECK(el[0].rpf.at(1).cc == 2);
    CHECK(el[0].rpf.at(1).euler == Rational(2));
    CHECK(el[0].rpc_euler == Rational(1));
    const TopoReport report = check_topology(el);
    CHECK(report.count("rpf") == 1);
  }
  SUBCASE("U shape cell split across both arms matches a voxel flood fill") {
    TetMesh mesh = fixture("ushape", false);
    SphereSet set;
    set.add(sphere_at(Vec3(3, 1, 1), 1.0));
    set.add(sphere_at(Vec3(3, 5, 1), 1.0));
    RpdEngine rpd(mesh);
    rpd.update(set);
    const auto el = accumulate_euler(rpd);
    auto inside = [](const Vec3& p) { return p.y() < 2.0 || p.x() < 2.0 || p.x() > 4.0; };
    const int oracle = voxel_components(inside, mesh.bbox, 0.1, set, 1);
    CHECK(oracle == 2);
    CHECK(el[1].rpc_cc == oracle);
    CHECK(el[0].rpc_cc == voxel_components(inside, mesh.bbox, 0.1, set, 0));
  }
}

TEST_CASE("fractional Euler equals the combinatorial Euler") {
  for (const std::string name : {"ball", "cube", "torus"}) {
    TetMesh mesh = fixture(name);
    SurfaceIndex surface(mesh);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      SphereSet set = random_spheres(mesh, surface, 2 + static_cast<int>(seed * 7 % 49), seed);
      RpdEngine rpd(mesh);
      rpd.update(set);
      const auto el = accumulate_euler(rpd);
      for (Index s = 0; s < static_cast<Index>(set.size()); ++s) {
        if (el[s].empty()) continue;
        const CombinatorialEuler ce = combinatorial_euler(rpd, s);
        CHECK(el[s].rpc_euler == Rational(ce.rpc));
        for (const auto& [j, v] : ce.rpf) CHECK(el[s].rpf.at(j).euler == Rational(v));
        for (const auto& [k, v] : ce.rpe) CHECK(el[s].rpe.at(k).euler == Rational(v));
      }
    }
  }
}

TEST_CASE("restricted faces agree from both sides") {
  TetMesh mesh = fixture("genus2");
  SurfaceIndex surface(mesh);
  SphereSet set = random_spheres(mesh, surface, 40, 21);
  RpdEngine rpd(mesh);
  rpd.update(set);
  const auto el = accumulate_euler(rpd);
  int pairs = 0;
  for (Index i = 0; i < static_cast<Index>(set.size()); ++i)
    for (const auto& [j, st] : el[i].rpf) {
      REQUIRE(el[j].rpf.count(i) == 1);
      CHECK(el[j].rpf.at(i).euler == st.euler);
      CHECK(el[j].rpf.at(i).cc == st.cc);
      ++pairs;
    }
  CHECK(pairs > 0);
  CHECK(conserved_euler(el) == Rational(-1));
  CHECK(weighted_payload_sum(rpd) == Rational(-1));
}

TEST_CASE("topology fixing") {
  SUBCASE("torus from one sphere") {
    TetMesh mesh = fixture("torus");
    SurfaceIndex surface(mesh);
    SphereSet set(1e-3 * mesh.bbox_diag);
    set.add(outermost_sphere(mesh, surface));
    const FixRun run = fix_until_clean(mesh, set, 50);
    CHECK(run.clean);
    CHECK(run.spheres == 3);
  }
  SUBCASE("a maximal ball sphere needs nothing") {
    TetMesh mesh = fixture("ball");
    SurfaceIndex surface(mesh);
    SphereSet set(1e-3 * mesh.bbox_diag);
    set.add(outermost_sphere(mesh, surface));
    const FixRun run = fix_until_clean(mesh, set, 5);
    CHECK(run.clean);
    CHECK(run.rounds == 0);
    CHECK(run.spheres == 1);
  }
  SUBCASE("U shape inserts into the other arm") {
    TetMesh mesh = fixture("ushape", false);
    SphereSet set(1e-3 * mesh.bbox_diag);
    set.add(sphere_at(Vec3(3, 1, 1), 1.0));
    set.add(sphere_at(Vec3(3, 5, 1), 1.0));
    SurfaceIndex surface(mesh);
    RpdEngine rpd(mesh);
    rpd.update(set);
    TopoReport report;
    const auto added = check_and_fix_topology(rpd, set, surface, fix_params(mesh), &report);
    CHECK(!report.empty());
    REQUIRE(!added.empty());
    bool left = false, right = false;
    for (const MedialSphere& m : added) {
      left = left || (m.center.x() < 2.0 && m.center.y() > 2.0);
      right = right || (m.center.x() > 4.0 && m.center.y() > 2.0);
    }
    CHECK((left || right));
  }
  SUBCASE("random starts terminate clean with the shape's Euler") {
    for (const std::string name : {"torus", "genus2", "ushape", "lblock"}) {
      CAPTURE(name);
      TetMesh mesh = fixture(name);
      SurfaceIndex surface(mesh);
      SphereSet set = random_spheres(mesh, surface, 5, 3);
      const FixRun run = fix_until_clean(mesh, set, 200);
      CHECK(run.clean);
      RpdEngine rpd(mesh);
      rpd.update(set);
      const auto el = accumulate_euler(rpd);
      CHECK(check_topology(el).empty());
    }
  }
}

TEST_CASE("topology report serialises one line per violation") {
  TetMesh mesh = fixture("torus", false);
  SphereSet set;
  set.add(sphere_at(Vec3(2, 0, 0), 0.5));
  set.add(sphere_at(Vec3(-2, 0, 0), 0.5));
  RpdEngine rpd(mesh);
  rpd.update(set);
  const TopoReport report = check_topology(accumulate_euler(rpd));
  const std::string text = report.to_jsonl(3);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == report.violations.size());
  CHECK(text.find("\"round\":3") != std::string::npos);
}

TEST_CASE("union find") {
  UnionFind uf(5);
  CHECK(uf.components() == 5);
  CHECK(uf.unite(0, 1));
  CHECK(!uf.unite(1, 0));
  uf.unite(3, 4);
  CHECK(uf.components() == 3);
  CHECK(uf.find(0) == uf.find(1));
  CHECK(uf.add() == 5);
  CHECK(uf.components() == 4);
}
