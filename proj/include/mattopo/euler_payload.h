#pragma once

#include <vector>

#include "mattopo/rational.h"
#include "mattopo/tet_mesh.h"

namespace mattopo {

/// Fractional Euler payload of every element of the tet complex: one over
/// the number of tets sharing it. Signs are applied by dimension when
/// summing (+vertex, -edge, +face, -cell).
struct PayloadTable {
  std::vector<Rational> vertex;
  std::vector<Rational> edge;
  std::vector<Rational> face;
};

PayloadTable init_fractional_euler(const TetMesh& mesh);

/// Sum over tets of the signed payloads of their elements; equals
/// mesh_euler for a valid mesh.
Rational signed_payload_sum(const TetMesh& mesh, const PayloadTable& table);

}  // namespace mattopo
