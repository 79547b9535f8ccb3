#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mattopo/mesh_io.h"
#include "mattopo/pipeline.h"
#include "mattopo/shapes.h"

namespace {

int run(mattopo::PipelineConfig config, const std::string& format, const std::string& init, bool quiet) {
  using namespace mattopo;
  if (quiet) spdlog::set_level(spdlog::level::warn);
  config.format = parse_mesh_format(format);
  if (init == "random") {
    config.init_mode = InitMode::kRandom;
  } else if (init != "fps") {
    throw Error("cli", "--init must be 'fps' or 'random'");
  }
  if (const char* env = std::getenv("MATTOPO_THREADS")) {
    try {
      config.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw Error("cli", std::string("MATTOPO_THREADS is not an integer: ") + env);
    }
  }
  config.validate();
  const TetMesh mesh = load_pipeline_mesh(config);
  const PipelineResult result = run_pipeline(mesh, config);
  export_all(mesh, result, config);
  spdlog::info("{}: {} rounds, {} spheres, Euler {}, {} components, {} topology violations left",
               result.fixpoint ? "fixpoint" : "max rounds", result.rounds, result.medial.vertices.size(),
               result.medial.euler(), result.medial.components(), result.final_report.violations.size());
  if (result.metrics)
    spdlog::info("eps1 {:.4f} eps2 {:.4f} eps_max {:.4f}", result.metrics->hausdorff.eps1,
                 result.metrics->hausdorff.eps2, result.metrics->hausdorff.eps_max);
  return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-preserving medial axis transform of tetrahedral meshes"};
  app.require_subcommand(1);

  mattopo::PipelineConfig config;
  std::string format = "auto";
  std::string init = "fps";
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Compute the medial mesh of a tet mesh");
  run_cmd->add_option("--input", config.input, "Input tet mesh (.mesh or .tet)")->required();
  run_cmd->add_option("--format", format, "mesh | tet | auto")->check(CLI::IsMember({"mesh", "tet", "auto"}));
  run_cmd->add_option("--init-spheres", config.init_spheres, "Number of initial spheres")->capture_default_str();
  run_cmd->add_option("--init", init, "Initial pins: fps (farthest point) or random")->capture_default_str();
  run_cmd->add_option("--delta-eps", config.delta_eps, "Geometric error bound, percent of diagonal")
      ->capture_default_str();
  run_cmd->add_option("--angle-deg", config.angle_deg, "Sharp feature dihedral threshold")->capture_default_str();
  run_cmd->add_option("--sample-density", config.sample_density, "Surface samples per unit area (normalised)")
      ->capture_default_str();
  run_cmd->add_option("--seed", config.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--max-rounds", config.max_rounds, "Round limit")->capture_default_str();
  run_cmd->add_option("--threads", config.threads, "Worker threads (MATTOPO_THREADS overrides)")
      ->capture_default_str();
  run_cmd->add_option("--out", config.out_dir, "Output directory")->required();
  run_cmd->add_flag("--export-rpd", config.export_rpd, "Write per-sphere RPD cells");
  run_cmd->add_flag("--report", config.report, "Write pipeline.json, topo_report.jsonl and spheres.sph");
  run_cmd->add_flag("--export-recon", config.export_reconstruction, "Write the reconstructed envelope");
  run_cmd->add_flag("--export-features", config.export_features, "Write feature curves");
  run_cmd->add_flag("--metrics", config.metrics, "Reconstruct and write metrics.json");
  run_cmd->add_option("--recon-resolution", config.reconstruction_resolution, "Reconstruction grid resolution")
      ->capture_default_str();
  run_cmd->add_flag("--quiet", quiet, "Only log warnings");

  std::string fixture;
  std::string fixture_out;
  auto* gen_cmd = app.add_subcommand("gen-fixture", "Write a built-in test solid as a tet mesh");
  gen_cmd->add_option("name", fixture, "Fixture name")->required()->check(CLI::IsMember(mattopo::shapes::names()));
  gen_cmd->add_option("path", fixture_out, "Output path (.mesh or .tet)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return run(config, format, init, quiet);
    const mattopo::RawTetMesh raw = mattopo::shapes::by_name(fixture);
    if (std::filesystem::path(fixture_out).extension() == ".tet") {
      mattopo::write_tet_file(fixture_out, raw);
    } else {
      mattopo::write_medit_file(fixture_out, raw);
    }
    return 0;
  } catch (const mattopo::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
}
