#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mattopo/common.h"
#include "mattopo/tet_mesh.h"

namespace mattopo {

/// A tet soup as read from disk, before validation.
struct RawTetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<Index, 4>> tets;
};

enum class MeshFormat { kAuto, kTet, kMedit };

/// Parses "mesh" / "tet" / "auto". Throws on anything else.
MeshFormat parse_mesh_format(const std::string& name);

RawTetMesh read_tet_file(const std::string& path);
RawTetMesh read_medit_file(const std::string& path);
void write_tet_file(const std::string& path, const RawTetMesh& mesh);
void write_medit_file(const std::string& path, const RawTetMesh& mesh);

/// Reads, validates and normalizes a tet mesh. kAuto picks the format from
/// the file extension.
TetMesh load_tet_mesh(const std::string& path, MeshFormat format = MeshFormat::kAuto,
                      bool normalize = true);

struct FeatureAnnotation {
  std::vector<std::array<Index, 2>> edges;
  std::vector<Index> corners;
};

/// Reads a `.fea` sidecar (`e i j` and `c i` lines, 0-based). Returns nullopt
/// when the file does not exist.
std::optional<FeatureAnnotation> read_fea_file(const std::string& path);

/// Sidecar path for a mesh file: same stem with the `.fea` extension.
std::string fea_path_for(const std::string& mesh_path);

void write_obj(const std::string& path, const std::vector<Vec3>& vertices,
               const std::vector<std::array<Index, 3>>& tris);

/// Polylines as OBJ `l` records.
void write_obj_polylines(const std::string& path, const std::vector<std::vector<Vec3>>& lines);

}  // namespace mattopo
