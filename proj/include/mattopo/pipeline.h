#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mattopo/geometry.h"
#include "mattopo/medial_mesh.h"
#include "mattopo/mesh_io.h"
#include "mattopo/reconstruct.h"
#include "mattopo/sphere.h"
#include "mattopo/tet_mesh.h"
#include "mattopo/topo.h"

namespace mattopo {

enum class InitMode { kFarthest, kRandom };

struct PipelineConfig {
  std::string input;
  MeshFormat format = MeshFormat::kAuto;
  int init_spheres = 50;
  InitMode init_mode = InitMode::kFarthest;
  double delta_eps = 0.6;       // percent of the diagonal
  double angle_deg = 30.0;      // sharp-feature threshold
  double sample_density = 0.002;  // samples per unit area of the normalised mesh
  std::uint64_t seed = 1;
  int max_rounds = 200;
  int threads = 1;
  std::string out_dir;
  bool export_rpd = false;
  bool report = false;
  bool export_reconstruction = false;
  bool export_features = false;
  bool metrics = false;
  int reconstruction_resolution = 256;
  std::size_t hausdorff_samples = 100000;
  bool external_features = true;
  bool internal_features = true;
  bool geometry = true;

  /// Throws Error("cli") when a field is out of range.
  void validate() const;
};

struct RoundStats {
  int round = 0;
  std::string stage;  // "topo", "extf", "intf", "geo" or "none"
  int inserted = 0;
  std::size_t n_spheres = 0;  // active spheres after the round
  std::size_t dirty = 0;
  std::size_t violations = 0;
  std::size_t rpc_violations = 0;
  std::size_t rpf_violations = 0;
  std::size_t rpe_violations = 0;
  std::size_t rpv_violations = 0;
  std::vector<std::string> fixed_kinds;  // "rpc:euler", "rpf:cc", ... when stage == "topo"
  std::optional<GeometryStats> geometry;
  std::string global_euler;  // conserved sum, exact
};

struct StageTimes {
  double s_topo = 0.0;  // includes the RPD updates
  double s_extf = 0.0;
  double s_intf = 0.0;
  double s_geo = 0.0;
  double total = 0.0;
};

struct Metrics {
  HausdorffResult hausdorff;
  int euler = 0;
  int components = 0;
  std::size_t n_spheres = 0;
  bool watertight = false;
  int reconstruction_euler = 0;
};

struct PipelineResult {
  bool fixpoint = false;
  int rounds = 0;
  int n_rpd_rounds = 0;
  std::vector<RoundStats> history;
  StageTimes times;
  SphereSet spheres;
  MedialMesh medial;
  TopoReport final_report;
  std::vector<SurfaceSample> samples;
  std::optional<Metrics> metrics;
  std::optional<TriangleMesh> reconstruction;
  std::string topo_jsonl;
  int exit_code() const { return fixpoint ? 0 : 2; }
};

/// Loads the input, installs sharp features from a `.fea` sidecar or by
/// detection.
TetMesh load_pipeline_mesh(const PipelineConfig& config);

/// Surface pins for the initial spheres.
std::vector<SurfaceSample> initial_pins(const std::vector<SurfaceSample>& samples, int count, InitMode mode,
                                        std::uint64_t seed);

/// Rounds of {RPD update; topology fix; external features; internal
/// features; geometry}. Each round applies the first stage that inserts a
/// sphere; a round where no stage inserts anything is the fixpoint.
PipelineResult run_pipeline(const TetMesh& mesh, const PipelineConfig& config);

nlohmann::json stats_json(const TetMesh& mesh, const PipelineResult& result);
nlohmann::json pipeline_json(const PipelineResult& result);
nlohmann::json metrics_json(const Metrics& metrics, const StageTimes& times);

/// Writes the `.ma` file and stats.json plus whatever the toggles request.
void export_all(const TetMesh& mesh, const PipelineResult& result, const PipelineConfig& config);

}  // namespace mattopo
