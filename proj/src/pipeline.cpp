#include "mattopo/pipeline.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "mattopo/features.h"
#include "mattopo/rpd.h"

namespace mattopo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int add_all(SphereSet& spheres, std::vector<MedialSphere> batch) {
  int added = 0;
  for (MedialSphere& m : batch) {
    m.is_new = true;
    if (spheres.add(std::move(m)) != kInvalidIndex) ++added;
  }
  return added;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot write " + path);
  out << text;
  if (!out) throw Error("cli", "write failed for " + path);
}

}  // namespace

void PipelineConfig::validate() const {
  if (init_spheres < 1) throw Error("cli", "--init-spheres must be at least 1");
  if (!(delta_eps > 0.0)) throw Error("cli", "--delta-eps must be positive");
  if (!(angle_deg > 0.0 && angle_deg < 180.0)) throw Error("cli", "--angle-deg must lie in (0, 180)");
  if (!(sample_density > 0.0)) throw Error("cli", "--sample-density must be positive");
  if (max_rounds < 1) throw Error("cli", "--max-rounds must be at least 1");
  if (threads < 1) throw Error("cli", "--threads must be at least 1");
  if (reconstruction_resolution < 2) throw Error("cli", "reconstruction resolution must be at least 2");
}

TetMesh load_pipeline_mesh(const PipelineConfig& config) {
  TetMesh mesh = load_tet_mesh(config.input, config.format);
  if (auto fea = read_fea_file(fea_path_for(config.input))) {
    set_features(mesh, fea->edges, fea->corners);
    spdlog::info("features: {} sharp edges, {} corners from sidecar", mesh.feature_edges.size(), mesh.corners.size());
  } else {
    detect_features(mesh, config.angle_deg);
    spdlog::info("features: {} sharp edges, {} corners detected at {} deg", mesh.feature_edges.size(),
                 mesh.corners.size(), config.angle_deg);
  }
  return mesh;
}

std::vector<SurfaceSample> initial_pins(const std::vector<SurfaceSample>& samples, int count, InitMode mode,
                                        std::uint64_t seed) {
  std::vector<const SurfaceSample*> pool;
  for (const SurfaceSample& s : samples)
    if (s.kind == SampleKind::kSurface) pool.push_back(&s);
  std::vector<SurfaceSample> out;
  if (pool.empty() || count <= 0) return out;
  std::mt19937_64 rng(seed);
  if (mode == InitMode::kRandom) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int k = 0; k < count; ++k) out.push_back(*pool[pick(rng)]);
    return out;
  }
  std::vector<double> dist(pool.size(), std::numeric_limits<double>::infinity());
  std::size_t next = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
  for (int k = 0; k < count && k < static_cast<int>(pool.size()); ++k) {
    out.push_back(*pool[next]);
    const Vec3 p = pool[next]->position;
    std::size_t far = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      dist[i] = std::min(dist[i], (pool[i]->position - p).squaredNorm());
      if (dist[i] > dist[far]) far = i;
    }
    next = far;
  }
  return out;
}

PipelineResult run_pipeline(const TetMesh& mesh, const PipelineConfig& config) {
  config.validate();
  const auto t_start = Clock::now();
  PipelineResult res;
  const double diag = mesh.bbox_diag;
  res.spheres = SphereSet(1e-3 * diag);
  SphereSet& spheres = res.spheres;

  const ShrinkParams shrink = ShrinkParams::for_diagonal(diag);
  const SurfaceIndex surface(mesh);
  res.samples = sample_surface(mesh, config.sample_density, config.seed);
  spdlog::info("mesh: {} tets, {} surface tris, diag {:.3f}; {} samples", mesh.tets.size(), mesh.surface_tris.size(),
               diag, res.samples.size());

  for (const SurfaceSample& pin : initial_pins(res.samples, config.init_spheres, config.init_mode, config.seed)) {
    MedialSphere m = sphere_shrink(surface, pin.position, pin.normal, shrink);
    if (m.radius > 0.0) spheres.add(std::move(m));
  }
  if (spheres.active_count() == 0) throw Error("spheres", "no initial sphere could be generated");
  spdlog::info("init: {} spheres", spheres.active_count());

  RpdOptions rpd_options;
  rpd_options.threads = config.threads;
  RpdEngine rpd(mesh, rpd_options);

  TopoFixParams topo_params;
  topo_params.shrink = shrink;
  FeatureParams feature_params;
  feature_params.segment_length = 0.02 * diag;
  feature_params.delta_eps = config.delta_eps;
  feature_params.shrink = shrink;
  feature_params.seed = config.seed;
  GeometryParams geo_params;
  geo_params.delta_eps = config.delta_eps;
  geo_params.shrink = shrink;
  const std::vector<FeatureSegment> segments = segment_feature_lines(mesh, feature_params.segment_length);
  FeatureMemory memory;

  std::vector<RestrictedElements> elements;
  bool stale = true;
  for (int round = 1; round <= config.max_rounds; ++round) {
    RoundStats rs;
    rs.round = round;
    auto t0 = Clock::now();
    rs.dirty = rpd.update(spheres).size();
    ++res.n_rpd_rounds;
    elements = accumulate_euler(rpd, config.threads);
    stale = false;
    rs.global_euler = conserved_euler(elements).str();
    TopoReport report = check_topology(elements);
    rs.violations = report.violations.size();
    rs.rpc_violations = report.count("rpc");
    rs.rpf_violations = report.count("rpf");
    rs.rpe_violations = report.count("rpe");
    rs.rpv_violations = report.count("rpv");
    if (config.report) res.topo_jsonl += report.to_jsonl(round, &mesh.normalization);
    spheres.clear_new_flags();

    int added = 0;
    if (!report.empty()) {
      added = add_all(spheres, fix_topology(report, elements, rpd, spheres, surface, topo_params));
      if (added > 0) {
        rs.stage = "topo";
        for (const TopoViolation& v : report.violations)
          rs.fixed_kinds.push_back(v.element + ":" + violation_kind_name(v.kind));
      }
    }
    res.final_report = std::move(report);
    res.times.s_topo += seconds_since(t0);

    if (added == 0 && config.external_features) {
      t0 = Clock::now();
      added = add_all(spheres, preserve_external_features(mesh, spheres, segments, res.samples, surface,
                                                          feature_params, memory));
      if (added > 0) rs.stage = "extf";
      res.times.s_extf += seconds_since(t0);
    }
    MedialMesh mm;
    if (added == 0) mm = thin_medial_mesh(extract_dual(elements), spheres);
    if (added == 0 && config.internal_features) {
      t0 = Clock::now();
      added = add_all(spheres,
                      preserve_internal_features(mesh, mm, elements, spheres, surface, feature_params, memory));
      if (added > 0) rs.stage = "intf";
      res.times.s_intf += seconds_since(t0);
    }
    if (added == 0 && config.geometry) {
      t0 = Clock::now();
      GeometryStats gs;
      added = add_all(spheres, geometry_check_and_insert(mesh, mm, spheres, res.samples, surface, geo_params, &gs,
                                                         config.threads));
      gs.inserted = added;
      rs.geometry = gs;
      if (added > 0) rs.stage = "geo";
      res.times.s_geo += seconds_since(t0);
    }
    rs.inserted = added;
    rs.n_spheres = spheres.active_count();
    if (added == 0) rs.stage = "none";
    spdlog::info("round {}: stage {} inserted {} spheres {} violations {} dirty {}", round, rs.stage, added,
                 rs.n_spheres, rs.violations, rs.dirty);
    res.history.push_back(std::move(rs));
    res.rounds = round;
    stale = added > 0;
    if (added == 0) {
      res.fixpoint = res.final_report.empty();
      if (!res.fixpoint)
        spdlog::warn("stalled: no stage inserted a sphere but {} topology violations remain",
                     res.final_report.violations.size());
      res.medial = std::move(mm);
      break;
    }
  }

  if (stale) {
    const auto t0 = Clock::now();
    rpd.update(spheres);
    ++res.n_rpd_rounds;
    elements = accumulate_euler(rpd, config.threads);
    res.final_report = check_topology(elements);
    res.medial = thin_medial_mesh(extract_dual(elements), spheres);
    res.times.s_topo += seconds_since(t0);
    spdlog::warn("max rounds reached without fixpoint; {} topology violations remain",
                 res.final_report.violations.size());
  }

  if (!config.out_dir.empty() && config.export_rpd)
    export_rpd_debug(rpd, spheres, (std::filesystem::path(config.out_dir) / "rpd").string());

  if (config.metrics || config.export_reconstruction) {
    TriangleMesh recon = reconstruct_envelope(res.medial, spheres, config.reconstruction_resolution, config.threads);
    if (config.metrics) {
      Metrics m;
      if (!recon.tris.empty())
        m.hausdorff = hausdorff(surface_of(mesh), recon, config.hausdorff_samples, config.seed, config.threads);
      m.euler = res.medial.euler();
      m.components = res.medial.components();
      m.n_spheres = res.medial.vertices.size();
      m.watertight = recon.watertight();
      m.reconstruction_euler = recon.euler();
      res.metrics = m;
    }
    res.reconstruction = std::move(recon);
  }
  res.times.total = seconds_since(t_start);
  return res;
}

nlohmann::json stats_json(const TetMesh& mesh, const PipelineResult& result) {
  nlohmann::json j;
  j["n_tets"] = mesh.tets.size();
  j["n_spheres"] = result.medial.vertices.size();
  j["n_rpd_rounds"] = result.n_rpd_rounds;
  j["s_topo"] = result.times.s_topo;
  j["s_extf"] = result.times.s_extf;
  j["s_intf"] = result.times.s_intf;
  j["s_geo"] = result.times.s_geo;
  j["total"] = result.times.total;
  return j;
}

nlohmann::json pipeline_json(const PipelineResult& result) {
  nlohmann::json j;
  j["fixpoint"] = result.fixpoint;
  j["rounds"] = result.rounds;
  j["n_rpd_rounds"] = result.n_rpd_rounds;
  j["euler"] = result.medial.euler();
  j["components"] = result.medial.components();
  j["remaining_violations"] = result.final_report.violations.size();
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundStats& rs : result.history) {
    nlohmann::json r;
    r["round"] = rs.round;
    r["stage"] = rs.stage;
    r["inserted"] = rs.inserted;
    r["n_spheres"] = rs.n_spheres;
    r["dirty"] = rs.dirty;
    r["global_euler"] = rs.global_euler;
    r["violations"] = {{"total", rs.violations},
                       {"rpc", rs.rpc_violations},
                       {"rpf", rs.rpf_violations},
                       {"rpe", rs.rpe_violations},
                       {"rpv", rs.rpv_violations}};
    if (rs.geometry) {
      r["geometry"] = {{"max_distance", rs.geometry->max_distance},
                       {"max_depth", rs.geometry->max_depth},
                       {"mean_distance", rs.geometry->mean_distance},
                       {"violations", rs.geometry->violations},
                       {"feature_violations", rs.geometry->feature_violations},
                       {"inserted", rs.geometry->inserted}};
    }
    rounds.push_back(r);
  }
  j["history"] = rounds;
  return j;
}

nlohmann::json metrics_json(const Metrics& m, const StageTimes& times) {
  nlohmann::json j;
  j["eps1"] = m.hausdorff.eps1;
  j["eps2"] = m.hausdorff.eps2;
  j["eps_max"] = m.hausdorff.eps_max;
  j["euler"] = m.euler;
  j["components"] = m.components;
  j["n_spheres"] = m.n_spheres;
  j["reconstruction_watertight"] = m.watertight;
  j["reconstruction_euler"] = m.reconstruction_euler;
  j["timings"] = {{"s_topo", times.s_topo},
                  {"s_extf", times.s_extf},
                  {"s_intf", times.s_intf},
                  {"s_geo", times.s_geo},
                  {"total", times.total}};
  return j;
}

void export_all(const TetMesh& mesh, const PipelineResult& result, const PipelineConfig& config) {
  namespace fs = std::filesystem;
  if (config.out_dir.empty()) throw Error("cli", "no output directory");
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);
  write_ma((dir / "medial.ma").string(), result.medial, result.spheres, &mesh.normalization);
  write_text((dir / "stats.json").string(), stats_json(mesh, result).dump(2) + "\n");
  if (config.report) {
    write_text((dir / "pipeline.json").string(), pipeline_json(result).dump(2) + "\n");
    write_text((dir / "topo_report.jsonl").string(), result.topo_jsonl);
    write_sph((dir / "spheres.sph").string(), result.spheres, &mesh.normalization);
  }
  if (config.export_features)
    export_feature_curves((dir / "features_external.obj").string(), (dir / "features_internal.obj").string(), mesh,
                          result.medial, result.spheres);
  if (config.export_reconstruction && result.reconstruction) {
    std::vector<Vec3> pts;
    for (const Vec3& p : result.reconstruction->vertices) pts.push_back(mesh.normalization.to_original(p));
    write_obj((dir / "reconstruction.obj").string(), pts, result.reconstruction->tris);
  }
  if (config.metrics && result.metrics)
    write_text((dir / "metrics.json").string(), metrics_json(*result.metrics, result.times).dump(2) + "\n");
}

}  // namespace mattopo
