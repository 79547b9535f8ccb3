// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "mattopo/features.h"
#include "mattopo/geometry.h"
#include "mattopo/medial_mesh.h"
#include "support.h"

using namespace mattopo;
using namespace mattopo::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

bool cell_contains(const ConvexCell& cell, const Vec3& p, double eps) {
  if (cell.empty()) return false;
  for (int k = 0; k < static_cast<int>(cell.planes().size()); ++k)
    if (cell.plane_used(k) && cell.planes()[k].eval(p) < -eps) return false;
  return true;
}

bool has_kind(const RoundStats& r, const std::string& suffix) {
  for (const std::string& k : r.fixed_kinds)
    if (k.size() >= suffix.size() && k.compare(k.size() - suffix.size(), suffix.size(), suffix) == 0) return true;
  return false;
}

std::string without_timings(nlohmann::json j) {
  for (const char* k : {"s_topo", "s_extf", "s_intf", "s_geo", "total"}) j.erase(k);
  return j.dump();
}

void torus_from_one_sphere(Outcome& o) {
  TetMesh mesh = fixture("torus");
  PipelineConfig config = quick_config(1.5);
  config.init_spheres = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult res = run_pipeline(mesh, config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(res.fixpoint, "fixpoint");
  o.require(res.medial.euler() == 0, "medial Euler 0");
  o.require(res.medial.components() == 1, "one component");
  o.require(seconds < 60.0, "under 60 s");
  int euler_round = -1, cc_round = -1;
  for (const RoundStats& r : res.history) {
    if (r.stage != "topo") continue;
    if (euler_round < 0 && has_kind(r, ":euler")) euler_round = r.round;
    if (cc_round < 0 && has_kind(r, ":cc")) cc_round = r.round;
  }
  o.require(euler_round == 1, "first round fixes an Euler violation");
  o.require(cc_round > euler_round, "component fix follows the Euler fix");
  o.detail << "rounds " << res.rounds << ", spheres " << res.medial.vertices.size() << ", " << seconds << " s, Euler fix in round "
           << euler_round << ", CC fix in round " << cc_round;
}

void fractional_equals_combinatorial(Outcome& o) {
  int sets = 0, elements = 0;
  for (const std::string name : {"ball", "cube", "torus"}) {
    TetMesh mesh = fixture(name);
    SurfaceIndex surface(mesh);
    for (std::uint64_t seed = 1; seed <= 34; ++seed) {
      const int count = 2 + static_cast<int>((seed * 13 + name.size()) % 49);
      SphereSet set = random_spheres(mesh, surface, count, 1000 + seed);
      RpdEngine rpd(mesh);
      rpd.update(set);
      const auto el = accumulate_euler(rpd);
      ++sets;
      for (Index s = 0; s < static_cast<Index>(set.size()); ++s) {
        if (el[s].empty()) continue;
        const CombinatorialEuler ce = combinatorial_euler(rpd, s);
        o.require(el[s].rpc_euler == Rational(ce.rpc), name + " rpc");
        ++elements;
        for (const auto& [j, v] : ce.rpf) {
          o.require(el[s].rpf.count(j) && el[s].rpf.at(j).euler == Rational(v), name + " rpf");
          ++elements;
        }
        for (const auto& [k, v] : ce.rpe) {
          o.require(el[s].rpe.count(k) && el[s].rpe.at(k).euler == Rational(v), name + " rpe");
          ++elements;
        }
      }
    }
  }
  o.require(sets >= 100, "at least 100 sets");
  o.detail << sets << " sphere sets, " << elements << " restricted elements";
}

void conserved_euler_every_round(Outcome& o) {
  int rounds = 0;
  for (const std::string name : {"torus", "genus2", "ushape", "cube"}) {
    TetMesh mesh = fixture(name);
    const PipelineResult res = run_pipeline(mesh, quick_config(1.5));
    const std::string expect = std::to_string(mesh_euler(mesh));
    for (const RoundStats& r : res.history) {
      o.require(r.global_euler == expect, name + " round " + std::to_string(r.round));
      ++rounds;
    }
  }
  o.detail << rounds << " rounds over torus, genus2, ushape, cube";
}

void volume_partition(Outcome& o) {
  double worst = 0.0;
  for (const std::string name : {"ball", "cube", "torus", "lblock", "genus2"}) {
    TetMesh mesh = fixture(name);
    SurfaceIndex surface(mesh);
    SphereSet set = random_spheres(mesh, surface, 40, 21);
    RpdEngine rpd(mesh);
    rpd.update(set);
    std::vector<double> per_tet(mesh.tets.size(), 0.0);
    for (Index s = 0; s < static_cast<Index>(set.size()); ++s)
      for (const RpdCell& c : rpd.cells(s)) per_tet[c.tet] += c.volume;
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
      const double rel = std::abs(per_tet[t] - mesh.tet_volume(t)) / mesh.tet_volume(t);
      worst = std::max(worst, rel);
    }
    const double total = std::abs(rpd.total_volume() - mesh.total_volume()) / mesh.total_volume();
    worst = std::max(worst, total);
  }
  o.require(worst <= 1e-6, "relative volume error within 1e-6");
  o.detail << "worst relative error " << worst;
}

void equal_radii_match_zero_radii(Outcome& o) {
  double worst = 0.0;
  for (const std::string name : {"torus", "cube"}) {
    TetMesh mesh = fixture(name);
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
      worst = std::max(worst, std::abs(ra.sphere_volume(s) - rb.sphere_volume(s)) / mesh.total_volume());
  }
  o.require(worst <= 1e-9, "volume difference within 1e-9");
  o.detail << "worst relative difference " << worst;
}

void relation_filter_soundness(Outcome& o) {
  long checked = 0;
  for (const std::string name : {"cube", "torus", "lblock"}) {
    TetMesh mesh = fixture(name);
    SurfaceIndex surface(mesh);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SphereSet set = random_spheres(mesh, surface, 15, 40 + seed);
      RpdEngine rpd(mesh);
      rpd.update(set);
      for (Index s = 0; s < static_cast<Index>(set.size()); ++s) {
        const auto& rel = rpd.related_tets(s);
        for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
          const ConvexCell cell = brute_force_cell(mesh, set, s, t, rpd.weight_jitter());
          if (cell.empty() || cell.volume() <= 1e-9 * mesh.tet_volume(t)) continue;
          o.require(std::binary_search(rel.begin(), rel.end(), t), name + " tet rejected but non-empty");
          ++checked;
        }
      }
    }
  }
  o.detail << checked << " non-empty brute-force cells all retained";
}

void point_membership(Outcome& o) {
  TetMesh mesh = fixture("torus");
  SurfaceIndex surface(mesh);
  SphereSet set = random_spheres(mesh, surface, 40, 9);
  RpdEngine rpd(mesh);
  rpd.update(set);
  VolumeSampler sampler(mesh);
  std::mt19937_64 rng(11);
  const int n = 100000;
  int inside = 0;
  for (int k = 0; k < n; ++k) {
    const auto [p, t] = sampler(rng);
    const Index s = power_nearest_sphere(set, p);
    bool found = false;
    for (const RpdCell& c : rpd.cells(s))
      if (c.tet == t && cell_contains(c.cell, p, 1e-6 * mesh.bbox_diag)) found = true;
    inside += found;
  }
  const double frac = static_cast<double>(inside) / n;
  o.require(frac >= 0.999, "at least 99.9% inside");
  o.detail << inside << " / " << n << " points in their power-nearest cell";
}

void feature_preservation(Outcome& o) {
  for (const std::string name : {"cube", "lblock"}) {
    TetMesh mesh = fixture(name);
    const PipelineResult res = run_pipeline(mesh, quick_config(1.5));
    o.require(res.fixpoint, name + " fixpoint");
    o.require(res.medial.euler() == shapes::ground_truth_euler(name), name + " Euler");
    int feature_samples = 0, zero_radius = 0;
    for (const SurfaceSample& s : res.samples) {
      if (s.kind == SampleKind::kSurface) continue;
      if (s.kind == SampleKind::kFeatureEdge && mesh.feature_edges[s.source].kind != FeatureKind::kConvex) continue;
      ++feature_samples;
      const MedialSphere& m = res.spheres[power_nearest_sphere(res.spheres, s.position)];
      zero_radius += m.is_feature() && m.radius == 0.0;
    }
    o.require(feature_samples > 0, name + " has convex feature samples");
    o.require(zero_radius == feature_samples, name + " feature samples nearest to zero-radius spheres");
    o.detail << name << ": Euler " << res.medial.euler() << ", " << zero_radius << "/" << feature_samples
             << " convex feature samples; ";
  }
}

void geometric_bound(Outcome& o) {
  TetMesh mesh = fixture("cylinder");
  double eps1[2] = {0, 0};
  std::size_t spheres[2] = {0, 0};
  const double deltas[2] = {1.5, 0.6};
  for (int k = 0; k < 2; ++k) {
    PipelineConfig config = quick_config(deltas[k]);
    config.metrics = true;
    config.reconstruction_resolution = 64;
    config.hausdorff_samples = 20000;
    const PipelineResult res = run_pipeline(mesh, config);
    o.require(res.fixpoint, "fixpoint");
    const auto d = sample_envelope_distances(mesh, res.medial, res.spheres, res.samples);
    const double worst = d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
    o.require(worst <= deltas[k], "every sample within the bound");
    spheres[k] = res.medial.vertices.size();
    eps1[k] = res.metrics ? res.metrics->hausdorff.eps1 : 1e300;
    o.detail << "delta " << deltas[k] << ": spheres " << spheres[k] << ", worst sample " << worst << ", eps1 "
             << eps1[k] << "; ";
  }
  o.require(spheres[1] >= spheres[0], "tighter bound uses at least as many spheres");
  o.require(eps1[1] < eps1[0], "tighter bound gives smaller eps1");
}

void incremental_matches_full(Outcome& o) {
  TetMesh mesh = fixture("torus");
  SurfaceIndex surface(mesh);
  SphereSet all = random_spheres(mesh, surface, 40, 8);
  SphereSet grow(all.dedup_radius());
  for (Index s = 0; s < 20; ++s) grow.add(all[s]);
  RpdEngine inc(mesh);
  inc.update(grow);
  for (Index s = 20; s < 40; ++s) {
    grow.add(all[s]);
    inc.update(grow);
  }
  RpdEngine full(mesh);
  full.update(grow);
  double worst = 0.0;
  for (Index s = 0; s < 40; ++s) {
    worst = std::max(worst, std::abs(inc.sphere_volume(s) - full.sphere_volume(s)) / mesh.total_volume());
    o.require(inc.neighbors(s) == full.neighbors(s), "neighbour sets agree");
  }
  o.require(worst <= 1e-12, "volumes within 1e-12");
  o.detail << "20 insertions, worst relative difference " << worst;
}

void determinism(Outcome& o) {
  TetMesh mesh = fixture("lblock");
  PipelineConfig a = quick_config(1.5);
  a.seed = 4;
  PipelineConfig b = a;
  b.threads = 4;
  const PipelineResult ra = run_pipeline(mesh, a), ra2 = run_pipeline(mesh, a), rb = run_pipeline(mesh, b);
  const std::string ma = ma_string(ra.medial, ra.spheres);
  o.require(ma == ma_string(ra2.medial, ra2.spheres), "repeat run .ma identical");
  o.require(ma == ma_string(rb.medial, rb.spheres), "4-thread run .ma identical");
  const std::string stats = without_timings(stats_json(mesh, ra));
  o.require(stats == without_timings(stats_json(mesh, ra2)), "repeat run stats identical");
  o.require(stats == without_timings(stats_json(mesh, rb)), "4-thread run stats identical");
  o.detail << ma.size() << " bytes of .ma, identical across 3 runs (1 and 4 threads)";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"torus from one sphere reaches a clean fixpoint", torus_from_one_sphere},
      {"fractional Euler equals combinatorial Euler", fractional_equals_combinatorial},
      {"conserved Euler equals the input every round", conserved_euler_every_round},
      {"cells partition the volume", volume_partition},
      {"equal radii match zero radii", equal_radii_match_zero_radii},
      {"tet relation filter is sound", relation_filter_soundness},
      {"points lie in their power-nearest cell", point_membership},
      {"sharp features are preserved", feature_preservation},
      {"geometric error bound holds and tightens", geometric_bound},
      {"incremental updates match a full recompute", incremental_matches_full},
      {"runs are deterministic", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
