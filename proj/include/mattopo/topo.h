#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mattopo/rational.h"
#include "mattopo/rpd.h"
#include "mattopo/sphere.h"

namespace mattopo {

struct ElementStat {
  Rational euler;
  int cc = 0;
};

/// Piece of the boundary surface inside one cell of an RPC.
struct SurfaceFacet {
  Index cell = kInvalidIndex;  // index into rpd.cells(sphere)
  Index surface_tri = kInvalidIndex;
  double area = 0.0;
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  int component = 0;  // RPC component of the owning cell
};

/// Point where a restricted face or edge meets the boundary surface.
struct SurfaceContact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  int component = 0;  // component of the owning RPF / RPE
};

/// Restricted power cell of one sphere with its restricted faces, edges and
/// vertices. Keys of `rpf` are neighbour ids, of `rpe` sorted neighbour
/// pairs, of `rpv` sorted neighbour triples.
struct RestrictedElements {
  Index sphere = kInvalidIndex;
  Rational rpc_euler;
  int rpc_cc = 0;
  std::map<Index, ElementStat> rpf;
  std::map<std::pair<Index, Index>, ElementStat> rpe;
  std::map<std::array<Index, 3>, ElementStat> rpv;
  std::vector<int> cell_component;  // per cell of the sphere
  std::vector<double> component_volume;
  std::vector<SurfaceFacet> surface;
  std::map<Index, std::vector<SurfaceContact>> rpf_contacts;
  std::map<std::pair<Index, Index>, std::vector<SurfaceContact>> rpe_contacts;
  std::map<Index, std::vector<Vec3>> rpf_points;  // all RPF vertex positions (fallback pins)
  std::map<std::pair<Index, Index>, std::vector<Vec3>> rpe_points;

  bool empty() const { return rpc_cc == 0; }
};

/// Streaming accumulation of the fractional Euler payloads and restricted
/// connected components for one sphere.
RestrictedElements accumulate_sphere(const RpdEngine& rpd, Index sphere);

/// All spheres (index = sphere id; empty entries for spheres without cells).
std::vector<RestrictedElements> accumulate_euler(const RpdEngine& rpd, int threads = 1);

/// Integer Euler characteristics of the same elements recomputed from the
/// explicitly deduplicated cell complex (vertex keys), without payloads.
struct CombinatorialEuler {
  int rpc = 0;
  std::map<Index, int> rpf;
  std::map<std::pair<Index, Index>, int> rpe;
};
CombinatorialEuler combinatorial_euler(const RpdEngine& rpd, Index sphere);

/// Inclusion-exclusion over restricted elements: sum chi(RPC) - sum chi(RPF)
/// + sum chi(RPE) - sum chi(RPV), each element counted once. Equals the
/// Euler characteristic of the input whenever the cells tile it.
Rational conserved_euler(const std::vector<RestrictedElements>& elements);

/// Sum over all cells of the signed payloads, each element divided by the
/// number of spheres sharing it.
Rational weighted_payload_sum(const RpdEngine& rpd);

enum class ViolationKind { kCC, kEuler, kMultiplicity };
const char* violation_kind_name(ViolationKind kind);

struct TopoViolation {
  Index sphere = kInvalidIndex;
  std::string element;        // "rpc", "rpf", "rpe", "rpv"
  std::vector<Index> others;  // neighbour ids naming the element
  ViolationKind kind = ViolationKind::kCC;
  int cc = 0;
  Rational euler;
  Vec3 evidence = Vec3::Zero();
  bool has_evidence = false;
};

struct TopoReport {
  std::vector<TopoViolation> violations;
  bool empty() const { return violations.empty(); }
  std::size_t count(const std::string& element) const;
  /// One JSON object per line.
  std::string to_jsonl(int round, const Normalization* denorm = nullptr) const;
};

/// Every restricted element must have CC = 1 and Euler = 1. Each shared
/// element is reported once, from its smallest sphere id.
TopoReport check_topology(const std::vector<RestrictedElements>& elements);

struct TopoFixParams {
  ShrinkParams shrink;
  int max_candidates = 8;
};

struct TopoFixStats {
  int pins_tried = 0;
  int duplicates = 0;
  int fallback_pins = 0;
};

/// Pins and shrinks one new sphere per violating element (one per extra
/// component for CC violations). Returned spheres are not yet registered and
/// are mutually deduplicated against `spheres`.
std::vector<MedialSphere> fix_topology(const TopoReport& report, const std::vector<RestrictedElements>& elements,
                                       const RpdEngine& rpd, const SphereSet& spheres, const SurfaceIndex& surface,
                                       const TopoFixParams& params, TopoFixStats* stats = nullptr);

/// check_topology followed by fix_topology.
std::vector<MedialSphere> check_and_fix_topology(const RpdEngine& rpd, const SphereSet& spheres,
                                                 const SurfaceIndex& surface, const TopoFixParams& params,
                                                 TopoReport* report_out = nullptr, int threads = 1);

/// Union-find with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0) { reset(n); }
  void reset(std::size_t n);
  int add();
  int find(int x);
  bool unite(int a, int b);
  int components();  // number of distinct roots
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace mattopo
