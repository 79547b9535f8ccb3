#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mattopo/features.h"
#include "mattopo/medial_mesh.h"
#include "support.h"

using namespace mattopo;
using namespace mattopo::testing;

namespace {

FeatureParams params_for(const TetMesh& mesh) {
  FeatureParams p;
  p.segment_length = 0.02 * mesh.bbox_diag;
  p.delta_eps = 1.5;
  p.shrink = ShrinkParams::for_diagonal(mesh.bbox_diag);
  return p;
}

// Repeats external feature preservation until it inserts nothing.
int saturate_external(const TetMesh& mesh, SphereSet& set, const std::vector<FeatureSegment>& segments,
                      FeatureMemory& memory) {
  SurfaceIndex surface(mesh);
  const auto samples = sample_surface(mesh, 0.002, 1);
  int rounds = 0;
  for (; rounds < 50; ++rounds) {
    const auto added = preserve_external_features(mesh, set, segments, samples, surface, params_for(mesh), memory);
    if (added.empty()) break;
    for (const MedialSphere& m : added) set.add(m);
  }
  return rounds;
}

// 5 x 5 grid of spheres across the mid-plane of the slab fixture.
SphereSet slab_grid(const TetMesh& mesh) {
  SphereSet set;
  const double h = mesh.bbox.extent().z() / 2;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) set.add(sphere_at(Vec3(100 + 200 * i, 100 + 200 * j, h), 0.8 * h));
  return set;
}

}  // namespace

TEST_CASE("feature segments") {
  TetMesh mesh = fixture("cube");
  const double h = 0.02 * mesh.bbox_diag;
  const auto segments = segment_feature_lines(mesh, h);
  double length = 0.0;
  for (const FeatureSegment& s : segments) {
    CHECK((s.b - s.a).norm() <= h * (1 + 1e-9));
    CHECK((s.midpoint - 0.5 * (s.a + s.b)).norm() < 1e-9);
    length += (s.b - s.a).norm();
  }
  CHECK(length == doctest::Approx(12 * 1000.0));
}

TEST_CASE("external features") {
  SUBCASE("smooth shape needs nothing") {
    TetMesh mesh = fixture("ball");
    SurfaceIndex surface(mesh);
    SphereSet set = random_spheres(mesh, surface, 5, 1);
    FeatureMemory memory;
    const auto segments = segment_feature_lines(mesh, 0.02 * mesh.bbox_diag);
    CHECK(segments.empty());
    const auto added = preserve_external_features(mesh, set, segments, sample_surface(mesh, 0.002, 1), surface,
                                                  params_for(mesh), memory);
    CHECK(added.empty());
  }
  SUBCASE("cube coverage becomes complete and stays put") {
    TetMesh mesh = fixture("cube");
    SurfaceIndex surface(mesh);
    SphereSet set = random_spheres(mesh, surface, 5, 1);
    const auto segments = segment_feature_lines(mesh, 0.02 * mesh.bbox_diag);
    CHECK(!feature_coverage(segments, set).complete());
    FeatureMemory memory;
    saturate_external(mesh, set, segments, memory);
    const FeatureCoverage cov = feature_coverage(segments, set);
    CHECK(cov.complete());
    for (Index owner : cov.owner) CHECK(set[owner].is_feature());
    int corners = 0;
    for (const MedialSphere& m : set.all()) corners += m.kind == SphereKind::kCorner;
    CHECK(corners == 8);
    FeatureMemory fresh;
    CHECK(saturate_external(mesh, set, segments, fresh) == 0);
  }
  SUBCASE("concave fans sweep between the two faces") {
    TetMesh mesh = fixture("lblock");
    SurfaceIndex surface(mesh);
    const FeatureLine* line = nullptr;
    for (const FeatureLine& l : mesh.feature_lines)
      if (l.kind == FeatureKind::kConcave) line = &l;
    REQUIRE(line != nullptr);
    const Vec3 p = 0.5 * (mesh.vertices[line->verts.front()] + mesh.vertices[line->verts.back()]);
    // The notch is the quadrant x, y > 500: its faces point into it.
    const ShrinkParams shrink = ShrinkParams::for_diagonal(mesh.bbox_diag);
    const auto fan = concave_fan_spheres(surface, p, Vec3(1, 0, 0), Vec3(0, 1, 0), 0.015 * mesh.bbox_diag, shrink);
    REQUIRE(fan.size() >= 3);
    const std::size_t mid = fan.size() / 2;
    // Only the middle member touches the edge point; the others back off by
    // up to the shrink tolerance.
    CHECK(std::abs((fan[mid].center - p).norm() - fan[mid].radius) < 1e-6 * mesh.bbox_diag);
    for (std::size_t k = 0; k < fan.size(); ++k) {
      const double gap = (fan[k].center - p).norm() - fan[k].radius;
      CHECK(gap >= -1e-6 * mesh.bbox_diag);
      CHECK(gap <= shrink.epsilon * (1 + 1e-9));
      const Vec3 dir = (p - fan[k].center).normalized();
      CHECK(dir.x() >= -1e-9);
      CHECK(dir.y() >= -1e-9);
    }
  }
}

TEST_CASE("sheet relation") {
  CHECK(check_internal_feature_pair({1, 2}, {1, 2}) == SheetRelation::kSameSheet);
  CHECK(check_internal_feature_pair({1, 2}, {1, 2, 3}) == SheetRelation::kCrossSheet);
  CHECK(check_internal_feature_pair({0, 1}, {2, 3}) == SheetRelation::kCrossSheet);
  CHECK(check_internal_feature_pair({}, {2, 3}) == SheetRelation::kSameSheet);

  TetMesh mesh = fixture("slab");
  const auto regions = surface_regions(mesh, 30.0);
  CHECK(*std::max_element(regions.begin(), regions.end()) == 5);
  SphereSet set = slab_grid(mesh);
  RpdEngine rpd(mesh);
  rpd.update(set);
  const auto el = accumulate_euler(rpd);
  auto sig = [&](int i, int j) { return region_signature(el[5 * i + j], regions, 0.05); };
  SUBCASE("neighbouring spheres inside the sheet") {
    CHECK(sig(2, 2).size() == 2);
    CHECK(check_internal_feature_pair(sig(2, 2), sig(2, 3)) == SheetRelation::kSameSheet);
    CHECK(check_internal_feature_pair(sig(2, 2), sig(2, 2)) == SheetRelation::kSameSheet);
  }
  SUBCASE("sphere against the side wall is on another sheet") {
    CHECK(sig(4, 2).size() == 3);
    CHECK(check_internal_feature_pair(sig(3, 2), sig(4, 2)) == SheetRelation::kCrossSheet);
  }
}

TEST_CASE("tangent planes cluster by normal") {
  MedialSphere m;
  m.tangents = {{Vec3(0, 0, 0), Vec3(0, 0, -1)},
                {Vec3(1, 0, 0), Vec3(0, 0.05, -1).normalized()},
                {Vec3(0, 0, 2), Vec3(0, 0, 1)}};
  CHECK(tangent_planes(m, 30.0).size() == 2);
  CHECK(tangent_planes(m, 1.0).size() == 3);
}

TEST_CASE("internal features on the L block") {
  TetMesh mesh = fixture("lblock");
  PipelineConfig config = quick_config();
  config.geometry = false;
  const PipelineResult res = run_pipeline(mesh, config);
  CHECK(res.fixpoint);
  int tn = 0;
  for (const MedialSphere& m : res.spheres.all()) {
    if (m.deleted || m.kind != SphereKind::kTN) continue;
    ++tn;
    CHECK(m.tangent_clusters >= 3);
  }
  CHECK(tn > 0);

  // A second pass over the converged spheres finds nothing new.
  RpdEngine rpd(mesh);
  rpd.update(res.spheres);
  const auto el = accumulate_euler(rpd);
  const MedialMesh mm = thin_medial_mesh(extract_dual(el), res.spheres);
  SurfaceIndex surface(mesh);
  FeatureMemory memory;
  FeatureParams p = params_for(mesh);
  p.seed = config.seed;
  std::size_t again = preserve_internal_features(mesh, mm, el, res.spheres, surface, p, memory).size();
  CHECK(again == 0);
}
