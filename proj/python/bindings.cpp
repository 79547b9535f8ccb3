#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "mattopo/mesh_io.h"
#include "mattopo/pipeline.h"
#include "mattopo/rpd.h"
#include "mattopo/shapes.h"
#include "mattopo/topo.h"

namespace py = pybind11;
using namespace mattopo;

namespace {

template <std::size_t N, class T>
py::array_t<T> to_array(const std::vector<std::array<T, N>>& rows) {
  py::array_t<T> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(N)});
  auto m = out.template mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < N; ++k) m(i, k) = rows[i][k];
  return out;
}

py::array_t<double> points_array(const std::vector<Vec3>& pts) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(3)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = pts[i][k];
  return out;
}

// Medial mesh with vertices renumbered 0..n-1 in sphere-id order, as written
// to .ma files, in normalized coordinates.
py::dict medial_dict(const PipelineResult& res) {
  std::map<Index, Index> local;
  std::vector<Vec3> centers;
  std::vector<double> radii;
  for (Index v : res.medial.vertices) {
    local.emplace(v, static_cast<Index>(centers.size()));
    centers.push_back(res.spheres[v].center);
    radii.push_back(res.spheres[v].radius);
  }
  std::vector<std::array<Index, 2>> edges;
  for (const auto& e : res.medial.edges) edges.push_back({local.at(e[0]), local.at(e[1])});
  std::vector<std::array<Index, 3>> faces;
  for (const auto& f : res.medial.faces) faces.push_back({local.at(f[0]), local.at(f[1]), local.at(f[2])});
  py::dict d;
  d["centers"] = points_array(centers);
  d["radii"] = py::array_t<double>(static_cast<py::ssize_t>(radii.size()), radii.data());
  d["edges"] = to_array(edges);
  d["faces"] = to_array(faces);
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

TetMesh fixture_mesh(const std::string& name, bool normalize, double angle_deg) {
  RawTetMesh raw = shapes::by_name(name);
  TetMesh mesh = build_tet_mesh(std::move(raw.vertices), std::move(raw.tets), normalize);
  detect_features(mesh, angle_deg);
  return mesh;
}

py::dict power_diagram(const TetMesh& mesh, py::array_t<double, py::array::c_style | py::array::forcecast> centers,
                       py::array_t<double, py::array::c_style | py::array::forcecast> radii, int threads) {
  if (centers.ndim() != 2 || centers.shape(1) != 3) throw Error("python", "centers must have shape (n, 3)");
  if (radii.ndim() != 1 || radii.shape(0) != centers.shape(0)) throw Error("python", "radii must have shape (n,)");
  const auto c = centers.unchecked<2>();
  const auto r = radii.unchecked<1>();
  SphereSet set;
  for (py::ssize_t i = 0; i < centers.shape(0); ++i) {
    MedialSphere m;
    m.center = Vec3(c(i, 0), c(i, 1), c(i, 2));
    m.radius = r(i);
    if (set.add(m) == kInvalidIndex) throw Error("python", "duplicate sphere at row " + std::to_string(i));
  }
  RpdOptions options;
  options.threads = threads;
  RpdEngine rpd(mesh, options);
  std::vector<double> volumes;
  std::vector<std::vector<Index>> neighbors;
  {
    py::gil_scoped_release release;
    rpd.update(set);
  }
  const auto elements = accumulate_euler(rpd, threads);
  const TopoReport report = check_topology(elements);
  for (Index s = 0; s < static_cast<Index>(set.size()); ++s) {
    volumes.push_back(rpd.sphere_volume(s));
    neighbors.push_back(rpd.neighbors(s));
  }
  py::list violations;
  for (const TopoViolation& v : report.violations) {
    py::dict d;
    d["sphere"] = v.sphere;
    d["element"] = v.element;
    d["others"] = v.others;
    d["kind"] = std::string(violation_kind_name(v.kind));
    d["cc"] = v.cc;
    d["euler"] = v.euler.str();
    violations.append(d);
  }
  py::dict out;
  out["volumes"] = py::array_t<double>(static_cast<py::ssize_t>(volumes.size()), volumes.data());
  out["neighbors"] = neighbors;
  out["conserved_euler"] = conserved_euler(elements).str();
  out["violations"] = violations;
  return out;
}

}  // namespace

PYBIND11_MODULE(_mattopo, m) {
  m.doc() = "Medial axis transform with topology and feature preservation";

  py::register_exception<Error>(m, "MattopoError", PyExc_RuntimeError);

  py::class_<TetMesh>(m, "TetMesh")
      .def_property_readonly("n_vertices", [](const TetMesh& t) { return t.vertices.size(); })
      .def_property_readonly("n_tets", [](const TetMesh& t) { return t.tets.size(); })
      .def_property_readonly("n_surface_triangles", [](const TetMesh& t) { return t.surface_tris.size(); })
      .def_property_readonly("n_feature_edges", [](const TetMesh& t) { return t.feature_edges.size(); })
      .def_property_readonly("n_corners", [](const TetMesh& t) { return t.corners.size(); })
      .def_property_readonly("bbox_diag", [](const TetMesh& t) { return t.bbox_diag; })
      .def_property_readonly("volume", &TetMesh::total_volume)
      .def_property_readonly("euler", [](const TetMesh& t) { return mesh_euler(t); })
      .def_property_readonly("vertices", [](const TetMesh& t) { return points_array(t.vertices); })
      .def_property_readonly("tets", [](const TetMesh& t) { return to_array(t.tets); })
      .def("__repr__", [](const TetMesh& t) {
        return "<TetMesh " + std::to_string(t.vertices.size()) + " vertices, " + std::to_string(t.tets.size()) +
               " tets>";
      });

  m.def(
      "load_mesh",
      [](const std::string& path, const std::string& format, double angle_deg) {
        PipelineConfig c;
        c.input = path;
        c.format = parse_mesh_format(format);
        c.angle_deg = angle_deg;
        return load_pipeline_mesh(c);
      },
      py::arg("path"), py::arg("format") = "auto", py::arg("angle_deg") = 30.0,
      "Read a .mesh or .tet file, normalize it and detect sharp features (or read a .fea sidecar).");
  m.def("fixture", &fixture_mesh, py::arg("name"), py::arg("normalize") = true, py::arg("angle_deg") = 30.0,
        "Built-in procedural tet mesh.");
  m.def("fixture_names", &shapes::names);
  m.def("ground_truth_euler", &shapes::ground_truth_euler, py::arg("name"));

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("init_spheres", &PipelineConfig::init_spheres)
      .def_property(
          "init_mode", [](const PipelineConfig& c) { return c.init_mode == InitMode::kRandom ? "random" : "fps"; },
          [](PipelineConfig& c, const std::string& s) {
            if (s == "fps") c.init_mode = InitMode::kFarthest;
            else if (s == "random") c.init_mode = InitMode::kRandom;
            else throw Error("python", "init_mode must be 'fps' or 'random'");
          })
      .def_readwrite("delta_eps", &PipelineConfig::delta_eps)
      .def_readwrite("angle_deg", &PipelineConfig::angle_deg)
      .def_readwrite("sample_density", &PipelineConfig::sample_density)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("max_rounds", &PipelineConfig::max_rounds)
      .def_readwrite("threads", &PipelineConfig::threads)
      .def_readwrite("out_dir", &PipelineConfig::out_dir)
      .def_readwrite("export_rpd", &PipelineConfig::export_rpd)
      .def_readwrite("report", &PipelineConfig::report)
      .def_readwrite("export_reconstruction", &PipelineConfig::export_reconstruction)
      .def_readwrite("export_features", &PipelineConfig::export_features)
      .def_readwrite("metrics", &PipelineConfig::metrics)
      .def_readwrite("reconstruction_resolution", &PipelineConfig::reconstruction_resolution)
      .def_readwrite("hausdorff_samples", &PipelineConfig::hausdorff_samples)
      .def_readwrite("external_features", &PipelineConfig::external_features)
      .def_readwrite("internal_features", &PipelineConfig::internal_features)
      .def_readwrite("geometry", &PipelineConfig::geometry)
      .def("validate", &PipelineConfig::validate);

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("fixpoint", &PipelineResult::fixpoint)
      .def_readonly("rounds", &PipelineResult::rounds)
      .def_readonly("n_rpd_rounds", &PipelineResult::n_rpd_rounds)
      .def_property_readonly("exit_code", &PipelineResult::exit_code)
      .def_property_readonly("euler", [](const PipelineResult& r) { return r.medial.euler(); })
      .def_property_readonly("components", [](const PipelineResult& r) { return r.medial.components(); })
      .def_property_readonly("n_spheres", [](const PipelineResult& r) { return r.medial.vertices.size(); })
      .def_property_readonly("medial", &medial_dict)
      .def_property_readonly("history", [](const PipelineResult& r) { return json_to_py(pipeline_json(r)["history"]); })
      .def_property_readonly("metrics", [](const PipelineResult& r) -> py::object {
        if (!r.metrics) return py::none();
        return json_to_py(metrics_json(*r.metrics, r.times));
      })
      .def("pipeline_json", [](const PipelineResult& r) { return json_to_py(pipeline_json(r)); });

  m.def(
      "run",
      [](const TetMesh& mesh, const PipelineConfig& config) {
        config.validate();
        py::gil_scoped_release release;
        return run_pipeline(mesh, config);
      },
      py::arg("mesh"), py::arg("config"), "Run the pipeline rounds until a fixpoint or the round limit.");
  m.def(
      "stats", [](const TetMesh& mesh, const PipelineResult& r) { return json_to_py(stats_json(mesh, r)); },
      py::arg("mesh"), py::arg("result"));
  m.def(
      "ma_string",
      [](const TetMesh& mesh, const PipelineResult& r) { return ma_string(r.medial, r.spheres, &mesh.normalization); },
      py::arg("mesh"), py::arg("result"), "Contents of medial.ma in input coordinates.");
  m.def(
      "export",
      [](const TetMesh& mesh, const PipelineResult& r, const PipelineConfig& config) { export_all(mesh, r, config); },
      py::arg("mesh"), py::arg("result"), py::arg("config"), "Write the outputs into config.out_dir.");
  m.def("power_diagram", &power_diagram, py::arg("mesh"), py::arg("centers"), py::arg("radii"),
        py::arg("threads") = 1,
        "Restricted power diagram of spheres (normalized coordinates): per-sphere volumes, neighbours, the "
        "conserved Euler sum and the topology violations.");
}
