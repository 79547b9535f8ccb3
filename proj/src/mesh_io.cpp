#include "mattopo/mesh_io.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace mattopo {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("mesh_io", what); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

MeshFormat parse_mesh_format(const std::string& name) {
  const std::string n = lower(name);
  if (n == "mesh" || n == "medit") return MeshFormat::kMedit;
  if (n == "tet") return MeshFormat::kTet;
  if (n == "auto" || n.empty()) return MeshFormat::kAuto;
  fail("unknown mesh format '" + name + "'");
}

RawTetMesh read_tet_file(const std::string& path) {
  std::ifstream in = open_in(path);
  long nv = -1, nt = -1;
  if (!(in >> nv >> nt) || nv < 0 || nt < 0) fail(path + ": bad header, expected 'nv nt'");
  RawTetMesh raw;
  raw.vertices.resize(nv);
  for (long i = 0; i < nv; ++i) {
    Vec3& p = raw.vertices[i];
    if (!(in >> p.x() >> p.y() >> p.z())) fail(path + ": truncated vertex block at vertex " + std::to_string(i));
  }
  raw.tets.resize(nt);
  for (long i = 0; i < nt; ++i) {
    auto& t = raw.tets[i];
    if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) fail(path + ": truncated tet block at tet " + std::to_string(i));
  }
  return raw;
}

RawTetMesh read_medit_file(const std::string& path) {
  std::ifstream in = open_in(path);
  RawTetMesh raw;
  std::string token;
  while (in >> token) {
    if (token[0] == '#') {
      std::getline(in, token);
      continue;
    }
    const std::string kw = lower(token);
    if (kw == "meshversionformatted" || kw == "dimension") {
      int value = 0;
      in >> value;
      if (kw == "dimension" && value != 3) fail(path + ": only 3D meshes are supported");
    } else if (kw == "vertices") {
      long n = 0;
      if (!(in >> n) || n < 0) fail(path + ": bad Vertices count");
      raw.vertices.resize(n);
      for (long i = 0; i < n; ++i) {
        long ref = 0;
        Vec3& p = raw.vertices[i];
        if (!(in >> p.x() >> p.y() >> p.z() >> ref)) fail(path + ": truncated Vertices section");
      }
    } else if (kw == "tetrahedra") {
      long n = 0;
      if (!(in >> n) || n < 0) fail(path + ": bad Tetrahedra count");
      raw.tets.resize(n);
      for (long i = 0; i < n; ++i) {
        long ref = 0;
        auto& t = raw.tets[i];
        if (!(in >> t[0] >> t[1] >> t[2] >> t[3] >> ref)) fail(path + ": truncated Tetrahedra section");
        for (Index& v : t) --v;
      }
    } else if (kw == "triangles" || kw == "edges" || kw == "corners" || kw == "ridges" ||
               kw == "requiredvertices") {
      // Boundary annotations are recomputed from the tets.
      static const std::map<std::string, int> kWidth = {
          {"triangles", 4}, {"edges", 3}, {"corners", 1}, {"ridges", 1}, {"requiredvertices", 1}};
      long n = 0;
      if (!(in >> n) || n < 0) fail(path + ": bad " + token + " count");
      for (long i = 0; i < n * kWidth.at(kw); ++i) {
        long skip = 0;
        if (!(in >> skip)) fail(path + ": truncated " + token + " section");
      }
    } else if (kw == "end") {
      break;
    } else {
      fail(path + ": unsupported MEDIT keyword '" + token + "'");
    }
  }
  if (raw.vertices.empty() || raw.tets.empty()) fail(path + ": missing Vertices or Tetrahedra");
  return raw;
}

void write_tet_file(const std::string& path, const RawTetMesh& mesh) {
  std::ofstream out = open_out(path);
  out << mesh.vertices.size() << ' ' << mesh.tets.size() << '\n';
  for (const Vec3& p : mesh.vertices) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.tets) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

void write_medit_file(const std::string& path, const RawTetMesh& mesh) {
  std::ofstream out = open_out(path);
  out << "MeshVersionFormatted 1\nDimension 3\nVertices\n" << mesh.vertices.size() << '\n';
  for (const Vec3& p : mesh.vertices) out << p.x() << ' ' << p.y() << ' ' << p.z() << " 0\n";
  out << "Tetrahedra\n" << mesh.tets.size() << '\n';
  for (const auto& t : mesh.tets)
    out << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << ' ' << t[3] + 1 << " 0\n";
  out << "End\n";
}

TetMesh load_tet_mesh(const std::string& path, MeshFormat format, bool normalize) {
  if (format == MeshFormat::kAuto) {
    const std::string ext = lower(std::filesystem::path(path).extension().string());
    if (ext == ".mesh") {
      format = MeshFormat::kMedit;
    } else if (ext == ".tet") {
      format = MeshFormat::kTet;
    } else {
      fail(path + ": cannot infer format from extension, pass --format");
    }
  }
  RawTetMesh raw = format == MeshFormat::kMedit ? read_medit_file(path) : read_tet_file(path);
  return build_tet_mesh(std::move(raw.vertices), std::move(raw.tets), normalize);
}

std::optional<FeatureAnnotation> read_fea_file(const std::string& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in = open_in(path);
  FeatureAnnotation fea;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "e") {
      std::array<Index, 2> e{};
      if (!(ls >> e[0] >> e[1])) fail(path + ":" + std::to_string(lineno) + ": bad edge line");
      fea.edges.push_back(e);
    } else if (tag == "c") {
      Index c = 0;
      if (!(ls >> c)) fail(path + ":" + std::to_string(lineno) + ": bad corner line");
      fea.corners.push_back(c);
    } else {
      fail(path + ":" + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  return fea;
}

std::string fea_path_for(const std::string& mesh_path) {
  return std::filesystem::path(mesh_path).replace_extension(".fea").string();
}

void write_obj(const std::string& path, const std::vector<Vec3>& vertices,
               const std::vector<std::array<Index, 3>>& tris) {
  std::ofstream out = open_out(path);
  for (const Vec3& p : vertices) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : tris) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_obj_polylines(const std::string& path, const std::vector<std::vector<Vec3>>& lines) {
  std::ofstream out = open_out(path);
  std::size_t base = 1;
  for (const auto& line : lines) {
    for (const Vec3& p : line) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    if (line.size() >= 2) {
      out << 'l';
      for (std::size_t k = 0; k < line.size(); ++k) out << ' ' << base + k;
      out << '\n';
    }
    base += line.size();
  }
}

}  // namespace mattopo
