#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "support.h"

using namespace mattopo;
using namespace mattopo::testing;

namespace {

SurfaceIndex::Hit ball_nearest(const Vec3& p, const Vec3& center, double radius) {
  SurfaceIndex::Hit h;
  Vec3 d = p - center;
  const double n = d.norm();
  const Vec3 dir = n > 0 ? Vec3(d / n) : Vec3(1, 0, 0);
  h.point = center + radius * dir;
  h.normal = dir;
  h.distance = std::abs(radius - n);
  return h;
}

// Two parallel planes z = 0 and z = thickness.
SurfaceIndex::Hit slab_nearest(const Vec3& p, double thickness) {
  SurfaceIndex::Hit h;
  if (p.z() < thickness - p.z()) {
    h.point = Vec3(p.x(), p.y(), 0.0);
    h.normal = Vec3(0, 0, -1);
  } else {
    h.point = Vec3(p.x(), p.y(), thickness);
    h.normal = Vec3(0, 0, 1);
  }
  h.distance = (h.point - p).norm();
  return h;
}

double unit_cube_distance(const Vec3& p) {
  double d = 1e300;
  for (int k = 0; k < 3; ++k) d = std::min({d, p[k], 1.0 - p[k]});
  return d;
}

}  // namespace

TEST_CASE("power distance") {
  CHECK(power_distance(sphere_at(Vec3::Zero(), 1.0), Vec3(2, 0, 0)) == doctest::Approx(3.0));
  CHECK(power_distance(sphere_at(Vec3(1, 1, 1), 0.0), Vec3(1, 1, 2)) == doctest::Approx(1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 200; ++i) {
    const MedialSphere m = sphere_at(Vec3(u(rng), u(rng), u(rng)), std::abs(u(rng)));
    const Vec3 p(u(rng), u(rng), u(rng));
    CHECK(power_distance(m, p) + m.radius * m.radius == doctest::Approx((p - m.center).squaredNorm()));
  }
}

TEST_CASE("sphere shrinking") {
  SUBCASE("inside a ball the shrunk sphere is the ball") {
    const double R = 3.0;
    const Vec3 c(1, -2, 0.5);
    ShrinkParams params = ShrinkParams::for_diagonal(2 * R);
    params.epsilon = 1e-9;
    auto nearest = [&](const Vec3& p) { return ball_nearest(p, c, R); };
    const Vec3 dir = Vec3(0.3, -0.5, 0.8).normalized();
    const MedialSphere m = sphere_shrink(nearest, c + R * dir, dir, params);
    CHECK((m.center - c).norm() < 1e-6 * R);
    CHECK(m.radius == doctest::Approx(R).epsilon(1e-6));
  }
  SUBCASE("between two planes the radius is half the gap") {
    const double h = 0.75;
    ShrinkParams params;
    params.initial_radius = 10.0;
    params.epsilon = 1e-9;
    const MedialSphere m = sphere_shrink([&](const Vec3& p) { return slab_nearest(p, 2 * h); }, Vec3(3, 4, 0),
                                         Vec3(0, 0, -1), params);
    CHECK((m.center - Vec3(3, 4, h)).norm() < 1e-9);
    CHECK(m.radius == doctest::Approx(h));
  }
  SUBCASE("unit cube face centre matches the dense inscribed-ball oracle") {
    const Vec3 pin(0.5, 0.5, 0.0), inward(0, 0, 1);
    double best = 0.0;
    for (int k = 0; k <= 100000; ++k) {
      const double t = k * 1e-5;
      if (unit_cube_distance(pin + t * inward) >= t - 1e-12) best = t;
    }
    RawTetMesh raw = shapes::cube_five_tets();
    TetMesh mesh = build_tet_mesh(raw.vertices, raw.tets, false);
    SurfaceIndex surface(mesh);
    ShrinkParams params = ShrinkParams::for_diagonal(mesh.bbox_diag);
    params.initial_radius = 0.8;
    const MedialSphere m = sphere_shrink(surface, pin, -inward, params);
    CHECK(m.radius == doctest::Approx(best).epsilon(1e-4));
    CHECK((m.center - Vec3(0.5, 0.5, 0.5)).norm() < 1e-4);
  }
  SUBCASE("slab fixture gives half its thickness") {
    TetMesh mesh = fixture("slab");
    SurfaceIndex surface(mesh);
    const double thickness = mesh.bbox.extent().z();
    const Vec3 pin(mesh.bbox.center().x(), mesh.bbox.center().y(), mesh.bbox.lo.z());
    const MedialSphere m = sphere_shrink(surface, pin, Vec3(0, 0, -1), ShrinkParams::for_diagonal(mesh.bbox_diag));
    CHECK(m.radius == doctest::Approx(0.5 * thickness).epsilon(1e-3));
  }
  SUBCASE("radius never grows and the result touches the surface twice") {
    TetMesh mesh = fixture("torus");
    SurfaceIndex surface(mesh);
    const ShrinkParams params = ShrinkParams::for_diagonal(mesh.bbox_diag);
    for (const SurfaceSample& s : sample_surface(mesh, 0.0005, 9)) {
      ShrinkTrace trace;
      const MedialSphere m = sphere_shrink(surface, s.position, s.normal, params, &trace);
      for (std::size_t k = 1; k < trace.radii.size(); ++k) CHECK(trace.radii[k] <= trace.radii[k - 1]);
      CHECK(m.radius <= params.initial_radius);
      CHECK(std::abs((m.center - s.position).norm() - m.radius) < 1e-9 * mesh.bbox_diag);
      CHECK(surface.nearest(m.center).distance >= m.radius - params.tangent_tol - params.epsilon);
      REQUIRE(m.tangents.size() == 2);
    }
  }
  SUBCASE("degenerate pin normal is an error") {
    TetMesh mesh = fixture("cube");
    SurfaceIndex surface(mesh);
    CHECK_THROWS_AS(sphere_shrink(surface, Vec3::Zero(), Vec3::Zero(), ShrinkParams{}), Error);
  }
}

TEST_CASE("tangent sphere optimisation") {
  SUBCASE("three orthogonal planes") {
    std::vector<TangentPoint> planes = {
        {Vec3(0, 2, 3), Vec3(-1, 0, 0)}, {Vec3(1, 0, 5), Vec3(0, -1, 0)}, {Vec3(4, 1, 0), Vec3(0, 0, -1)}};
    const MedialSphere m = optimize_tn_sphere(planes, sphere_at(Vec3(0.3, 0.7, 0.2), 0.4));
    CHECK(tangency_residual(planes, m.center, m.radius) < 1e-12);
    CHECK(m.center.x() == doctest::Approx(m.radius));
    CHECK(m.center.y() == doctest::Approx(m.radius));
    CHECK(m.center.z() == doctest::Approx(m.radius));
    CHECK(m.kind == SphereKind::kTN);
  }
  SUBCASE("four faces of a regular tet give the insphere") {
    TetMesh mesh = fixture("tet", false);
    std::vector<TangentPoint> planes;
    for (const SurfaceTri& t : mesh.surface_tris) planes.push_back({mesh.vertices[t.v[0]], t.normal});
    const double edge = (mesh.vertices[0] - mesh.vertices[1]).norm();
    const MedialSphere m = optimize_tn_sphere(planes, sphere_at(Vec3(5, 5, 5), 0.0));
    CHECK((m.center - tet_centroid(mesh, 0)).norm() < 1e-9);
    CHECK(m.radius == doctest::Approx(edge / std::sqrt(24.0)).epsilon(1e-9));
  }
  SUBCASE("two planes are rank deficient") {
    std::vector<TangentPoint> planes = {{Vec3::Zero(), Vec3(-1, 0, 0)}, {Vec3::Zero(), Vec3(0, -1, 0)}};
    CHECK_THROWS_AS(optimize_tn_sphere(planes, sphere_at(Vec3::Zero(), 1.0)), Error);
  }
  SUBCASE("never worse than the initial guess") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<TangentPoint> planes;
      const int n = 3 + trial % 4;
      for (int k = 0; k < n; ++k) planes.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)).normalized()});
      const MedialSphere init = sphere_at(Vec3(u(rng), u(rng), u(rng)), std::abs(u(rng)));
      MedialSphere m;
      try {
        m = optimize_tn_sphere(planes, init);
      } catch (const Error&) {
        continue;
      }
      CHECK(tangency_residual(planes, m.center, m.radius) <=
            tangency_residual(planes, init.center, init.radius) + 1e-12);
    }
  }
}

TEST_CASE("feature spheres") {
  RawTetMesh raw = shapes::cube_five_tets();
  TetMesh mesh = build_tet_mesh(raw.vertices, raw.tets, false);
  detect_features(mesh, 30.0);
  const MedialSphere corner = make_feature_sphere(mesh, Vec3(0, 0, 0), SphereKind::kCorner);
  CHECK(corner.radius == 0.0);
  CHECK(corner.is_feature());
  const MedialSphere edge = make_feature_sphere(mesh, Vec3(0.5, 0, 0), SphereKind::kFeatureEdge);
  CHECK(edge.center == Vec3(0.5, 0, 0));
  CHECK_THROWS_AS(make_feature_sphere(mesh, Vec3(0.5, 0.5, 0.5), SphereKind::kFeatureEdge), Error);
  CHECK_THROWS_AS(make_feature_sphere(mesh, Vec3(0.5, 0.5, 0.0), SphereKind::kFeatureEdge), Error);
  CHECK_THROWS_AS(make_feature_sphere(mesh, Vec3(0.5, 0, 0), SphereKind::kCorner), Error);
}

TEST_CASE("sphere set") {
  SphereSet set(0.01);
  CHECK(set.add(sphere_at(Vec3::Zero(), 1.0)) == 0);
  CHECK(set.add(sphere_at(Vec3(0.001, 0, 0), 1.001)) == kInvalidIndex);
  CHECK(set.add(sphere_at(Vec3(0.001, 0, 0), 0.5)) == 1);
  CHECK(set.add(sphere_at(Vec3(2, 0, 0), 0.5)) == 2);
  CHECK_THROWS_AS(set.add(sphere_at(Vec3::Zero(), -1.0)), Error);
  set.remove(1);
  CHECK(set.active_count() == 2);
  CHECK(set.active_ids() == std::vector<Index>{0, 2});
  CHECK(set[2].id == 2);

  const std::string path = (std::filesystem::temp_directory_path() / "mattopo_test.sph").string();
  set[2].kind = SphereKind::kCorner;
  write_sph(path, set);
  const auto back = read_sph(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == 2);
  CHECK(back[1].kind == SphereKind::kCorner);
  CHECK(back[1].center == set[2].center);
  CHECK(parse_sphere_kind(sphere_kind_name(SphereKind::kTN)) == SphereKind::kTN);
  CHECK_THROWS_AS(parse_sphere_kind("bogus"), Error);
}
