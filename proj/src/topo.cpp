#include "mattopo/topo.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mattopo/bvh.h"
#include "mattopo/parallel.h"

namespace mattopo {

// ---------------------------------------------------------------------------
// Payload table

PayloadTable init_fractional_euler(const TetMesh& mesh) {
  PayloadTable t;
  t.vertex.resize(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    t.vertex[v] = mesh.vertex_valence[v] > 0 ? Rational(1, mesh.vertex_valence[v]) : Rational(0);
  t.edge.resize(mesh.edges.size());
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) t.edge[e] = Rational(1, mesh.edge_valence[e]);
  t.face.resize(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    t.face[f] = Rational(1, mesh.face_valence(static_cast<Index>(f)));
  return t;
}

Rational signed_payload_sum(const TetMesh& mesh, const PayloadTable& table) {
  Rational s(0);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    for (Index v : mesh.tets[t]) s += table.vertex[v];
    for (Index e : mesh.tet_edges[t]) s -= table.edge[e];
    for (Index f : mesh.tet_faces[t]) s += table.face[f];
    s -= Rational(1);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Union-find

void UnionFind::reset(std::size_t n) {
  parent_.resize(n);
  size_.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<int>(i);
}

int UnionFind::add() {
  parent_.push_back(static_cast<int>(parent_.size()));
  size_.push_back(1);
  return parent_.back();
}

int UnionFind::find(int x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

int UnionFind::components() {
  int n = 0;
  for (std::size_t i = 0; i < parent_.size(); ++i) n += find(static_cast<int>(i)) == static_cast<int>(i) ? 1 : 0;
  return n;
}

namespace {

// Dense component labels in order of first appearance.
std::vector<int> labels(UnionFind& uf, int& count) {
  std::vector<int> root_label(uf.size(), -1);
  std::vector<int> out(uf.size());
  count = 0;
  for (std::size_t i = 0; i < uf.size(); ++i) {
    const int r = uf.find(static_cast<int>(i));
    if (root_label[r] < 0) root_label[r] = count++;
    out[i] = root_label[r];
  }
  return out;
}

// Groups of items connected through shared vertex keys.
class KeyedComponents {
 public:
  int add_item() { return uf_.add(); }
  void link(int item, const VertexKey& key) {
    auto [it, fresh] = first_.emplace(key, item);
    if (!fresh) uf_.unite(item, it->second);
  }
  int item_of(const VertexKey& key) const {
    auto it = first_.find(key);
    return it == first_.end() ? -1 : it->second;
  }
  std::vector<int> finish(int& count) { return labels(uf_, count); }

 private:
  UnionFind uf_;
  std::unordered_map<VertexKey, int, VertexKeyHash> first_;
};

Index radical_tag(const CellPlane& p) { return p.is_tet_face() ? kInvalidIndex : p.tag; }

std::pair<Index, Index> ordered(Index a, Index b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

std::array<Index, 3> sorted3(Index a, Index b, Index c) {
  std::array<Index, 3> t = {a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Accumulation

RestrictedElements accumulate_sphere(const RpdEngine& rpd, Index s) {
  RestrictedElements R;
  R.sphere = s;
  const auto& cells = rpd.cells(s);
  if (cells.empty()) return R;
  const TetMesh& mesh = rpd.mesh();

  KeyedComponents cell_cc;
  std::map<Index, KeyedComponents> rpf_cc;
  std::map<std::pair<Index, Index>, KeyedComponents> rpe_cc;
  std::map<std::array<Index, 3>, std::set<VertexKey>> rpv_keys;

  struct FacetRef {
    Index tag;
    int item;
  };
  std::vector<std::vector<FacetRef>> cell_facets(cells.size());

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const RpdCell& rc = cells[ci];
    const ConvexCell& cell = rc.cell;
    const auto& planes = cell.planes();
    const auto& verts = cell.vertices();

    R.rpc_euler += cell.euler();
    const int cell_item = cell_cc.add_item();
    for (const VertexKey& k : rc.keys) cell_cc.link(cell_item, k);

    for (int p = 0; p < static_cast<int>(planes.size()); ++p) {
      const Index j = radical_tag(planes[p]);
      if (j < 0 || !cell.plane_used(p)) continue;
      ElementStat& st = R.rpf[j];
      st.euler += cell.facet_payload(p);
      KeyedComponents& kc = rpf_cc[j];
      const int item = kc.add_item();
      cell_facets[ci].push_back({j, item});
      for (std::size_t v = 0; v < verts.size(); ++v)
        if (verts[v].has(p)) kc.link(item, rc.keys[v]);
    }

    for (const CellEdge& e : cell.edges()) {
      const Index ta = radical_tag(planes[e.a]);
      const Index tb = radical_tag(planes[e.b]);
      if (ta >= 0) R.rpf[ta].euler -= e.payload;
      if (tb >= 0) R.rpf[tb].euler -= e.payload;
      if (ta >= 0 && tb >= 0) {
        const auto key = ordered(ta, tb);
        R.rpe[key].euler -= e.payload;
        KeyedComponents& kc = rpe_cc[key];
        const int item = kc.add_item();
        for (std::size_t v = 0; v < verts.size(); ++v)
          if (verts[v].has(e.a) && verts[v].has(e.b)) kc.link(item, rc.keys[v]);
      }
    }

    for (std::size_t v = 0; v < verts.size(); ++v) {
      Index tags[3];
      int nt = 0;
      for (int k = 0; k < 3; ++k) {
        const Index t = radical_tag(planes[verts[v].p[k]]);
        if (t >= 0) tags[nt++] = t;
      }
      for (int a = 0; a < nt; ++a) {
        R.rpf[tags[a]].euler += verts[v].payload;
        R.rpf_points[tags[a]].push_back(verts[v].pos);
      }
      for (int a = 0; a < nt; ++a)
        for (int b = a + 1; b < nt; ++b) {
          const auto key = ordered(tags[a], tags[b]);
          R.rpe[key].euler += verts[v].payload;
          R.rpe_points[key].push_back(verts[v].pos);
        }
      if (nt == 3) {
        const auto key = sorted3(tags[0], tags[1], tags[2]);
        R.rpv[key].euler += verts[v].payload;
        rpv_keys[key].insert(rc.keys[v]);
      }
    }
  }

  int count = 0;
  R.cell_component = cell_cc.finish(count);
  R.rpc_cc = count;
  R.component_volume.assign(count, 0.0);
  for (std::size_t ci = 0; ci < cells.size(); ++ci) R.component_volume[R.cell_component[ci]] += cells[ci].volume;

  std::map<Index, std::vector<int>> rpf_labels;
  for (auto& [j, kc] : rpf_cc) {
    rpf_labels[j] = kc.finish(count);
    R.rpf[j].cc = count;
  }
  std::map<std::pair<Index, Index>, std::vector<int>> rpe_labels;
  for (auto& [key, kc] : rpe_cc) {
    rpe_labels[key] = kc.finish(count);
    R.rpe[key].cc = count;
  }
  for (auto& [key, st] : R.rpe)
    if (st.cc == 0) st.cc = 1;  // an RPE reduced to isolated points
  for (auto& [key, keys] : rpv_keys) R.rpv[key].cc = static_cast<int>(keys.size());

  // Surface contacts.
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const RpdCell& rc = cells[ci];
    const ConvexCell& cell = rc.cell;
    const auto& planes = cell.planes();
    const auto& verts = cell.vertices();
    std::vector<int> boundary_planes;
    for (int p = 0; p < static_cast<int>(planes.size()); ++p) {
      if (!planes[p].is_tet_face() || !cell.plane_used(p)) continue;
      const Index f = mesh.tet_faces[rc.tet][planes[p].tet_face()];
      if (mesh.face_surface[f] >= 0) boundary_planes.push_back(p);
    }
    if (boundary_planes.empty()) continue;
    const auto polys = cell.facet_polygons();
    for (int p : boundary_planes) {
      const Index st = mesh.face_surface[mesh.tet_faces[rc.tet][planes[p].tet_face()]];
      const Vec3& normal = mesh.surface_tris[st].normal;
      const auto& poly = polys[p];
      if (poly.size() >= 3) {
        SurfaceFacet sf;
        sf.cell = static_cast<Index>(ci);
        sf.surface_tri = st;
        sf.normal = normal;
        sf.component = R.cell_component[ci];
        Vec3 acc = Vec3::Zero();
        double area = 0.0;
        const Vec3& o = verts[poly[0]].pos;
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
          const Vec3& b = verts[poly[k]].pos;
          const Vec3& c = verts[poly[k + 1]].pos;
          const double a = 0.5 * (b - o).cross(c - o).norm();
          acc += a * (o + b + c) / 3.0;
          area += a;
        }
        sf.area = area;
        sf.centroid = area > 0 ? Vec3(acc / area) : o;
        R.surface.push_back(sf);
      }
      // Radical facets meeting this surface facet.
      for (const CellEdge& e : cell.edges()) {
        int other = -1;
        if (e.a == p) other = e.b;
        if (e.b == p) other = e.a;
        if (other < 0) continue;
        const Index j = radical_tag(planes[other]);
        if (j < 0) continue;
        Vec3 mid = Vec3::Zero();
        int n = 0;
        for (const CellVertex& v : verts)
          if (v.has(p) && v.has(other)) {
            mid += v.pos;
            ++n;
          }
        if (n == 0) continue;
        SurfaceContact sc;
        sc.point = mid / n;
        sc.normal = normal;
        for (const FacetRef& fr : cell_facets[ci])
          if (fr.tag == j) sc.component = rpf_labels[j][fr.item];
        R.rpf_contacts[j].push_back(sc);
      }
      for (std::size_t v = 0; v < verts.size(); ++v) {
        if (!verts[v].has(p)) continue;
        Index tags[2];
        int nt = 0;
        for (int k = 0; k < 3; ++k) {
          const Index t = radical_tag(planes[verts[v].p[k]]);
          if (t >= 0 && nt < 2) tags[nt++] = t;
        }
        if (nt != 2) continue;
        const auto key = ordered(tags[0], tags[1]);
        SurfaceContact sc;
        sc.point = verts[v].pos;
        sc.normal = normal;
        auto lab = rpe_labels.find(key);
        if (lab != rpe_labels.end()) {
          const int item = rpe_cc[key].item_of(rc.keys[v]);
          if (item >= 0) sc.component = lab->second[item];
        }
        R.rpe_contacts[key].push_back(sc);
      }
    }
  }
  return R;
}

std::vector<RestrictedElements> accumulate_euler(const RpdEngine& rpd, int threads) {
  std::vector<RestrictedElements> out(rpd.num_spheres());
  parallel_for(out.size(), threads, [&](std::size_t s) { out[s] = accumulate_sphere(rpd, static_cast<Index>(s)); });
  return out;
}

// ---------------------------------------------------------------------------
// Combinatorial oracle

CombinatorialEuler combinatorial_euler(const RpdEngine& rpd, Index s) {
  CombinatorialEuler out;
  const auto& cells = rpd.cells(s);
  using EdgeKey = std::pair<VertexKey, VertexKey>;
  std::set<VertexKey> V;
  std::set<EdgeKey> E;
  std::set<std::vector<VertexKey>> F;
  std::map<Index, std::set<VertexKey>> fV;
  std::map<Index, std::set<EdgeKey>> fE;
  std::map<Index, std::set<std::vector<VertexKey>>> fF;
  std::map<std::pair<Index, Index>, std::set<VertexKey>> eV;
  std::map<std::pair<Index, Index>, std::set<EdgeKey>> eE;

  for (const RpdCell& rc : cells) {
    const ConvexCell& cell = rc.cell;
    const auto& planes = cell.planes();
    const auto& verts = cell.vertices();
    for (std::size_t v = 0; v < verts.size(); ++v) {
      V.insert(rc.keys[v]);
      for (int k = 0; k < 3; ++k) {
        const Index t = radical_tag(planes[verts[v].p[k]]);
        if (t >= 0) fV[t].insert(rc.keys[v]);
        for (int m = k + 1; m < 3; ++m) {
          const Index u = radical_tag(planes[verts[v].p[m]]);
          if (t >= 0 && u >= 0) eV[ordered(t, u)].insert(rc.keys[v]);
        }
      }
    }
    for (const CellEdge& e : cell.edges()) {
      std::vector<VertexKey> ends;
      for (std::size_t v = 0; v < verts.size(); ++v)
        if (verts[v].has(e.a) && verts[v].has(e.b)) ends.push_back(rc.keys[v]);
      if (ends.size() != 2) throw Error("topo", "cell edge without two endpoints");
      const EdgeKey ek = ends[0] < ends[1] ? EdgeKey(ends[0], ends[1]) : EdgeKey(ends[1], ends[0]);
      E.insert(ek);
      const Index ta = radical_tag(planes[e.a]);
      const Index tb = radical_tag(planes[e.b]);
      if (ta >= 0) fE[ta].insert(ek);
      if (tb >= 0) fE[tb].insert(ek);
      if (ta >= 0 && tb >= 0) eE[ordered(ta, tb)].insert(ek);
    }
    const auto polys = cell.facet_polygons();
    for (std::size_t p = 0; p < polys.size(); ++p) {
      if (polys[p].empty()) continue;
      std::vector<VertexKey> fk;
      for (int v : polys[p]) fk.push_back(rc.keys[v]);
      std::sort(fk.begin(), fk.end());
      F.insert(fk);
      const Index t = radical_tag(planes[p]);
      if (t >= 0) fF[t].insert(fk);
    }
  }
  out.rpc = static_cast<int>(V.size()) - static_cast<int>(E.size()) + static_cast<int>(F.size()) -
            static_cast<int>(cells.size());
  for (const auto& [j, vs] : fV)
    out.rpf[j] = static_cast<int>(vs.size()) - static_cast<int>(fE[j].size()) + static_cast<int>(fF[j].size());
  for (const auto& [key, vs] : eV) out.rpe[key] = static_cast<int>(vs.size()) - static_cast<int>(eE[key].size());
  return out;
}

// ---------------------------------------------------------------------------
// Conservation

Rational conserved_euler(const std::vector<RestrictedElements>& elements) {
  Rational s(0);
  for (const RestrictedElements& R : elements) {
    if (R.empty()) continue;
    const Index i = R.sphere;
    s += R.rpc_euler;
    for (const auto& [j, st] : R.rpf)
      if (i < j) s -= st.euler;
    for (const auto& [key, st] : R.rpe)
      if (i < key.first) s += st.euler;
    for (const auto& [key, st] : R.rpv)
      if (i < key[0]) s -= st.euler;
  }
  return s;
}

Rational weighted_payload_sum(const RpdEngine& rpd) {
  Rational s(0);
  for (Index sp = 0; sp < static_cast<Index>(rpd.num_spheres()); ++sp) {
    for (const RpdCell& rc : rpd.cells(sp)) {
      const ConvexCell& cell = rc.cell;
      const auto& planes = cell.planes();
      auto radicals = [&](std::initializer_list<int> ps) {
        std::int64_t n = 1;
        for (int p : ps) n += planes[p].is_tet_face() ? 0 : 1;
        return n;
      };
      s -= Rational(1);
      for (const CellVertex& v : cell.vertices()) s += v.payload / Rational(radicals({v.p[0], v.p[1], v.p[2]}));
      for (const CellEdge& e : cell.edges()) s -= e.payload / Rational(radicals({e.a, e.b}));
      for (int p = 0; p < static_cast<int>(planes.size()); ++p)
        if (cell.plane_used(p)) s += cell.facet_payload(p) / Rational(radicals({p}));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Check

const char* violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCC: return "cc";
    case ViolationKind::kEuler: return "euler";
    case ViolationKind::kMultiplicity: return "multiplicity";
  }
  return "?";
}

std::size_t TopoReport::count(const std::string& element) const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                 [&](const TopoViolation& v) { return v.element == element; }));
}

std::string TopoReport::to_jsonl(int round, const Normalization* denorm) const {
  std::ostringstream os;
  for (const TopoViolation& v : violations) {
    nlohmann::json j;
    j["round"] = round;
    j["sphere"] = v.sphere;
    j["element"] = v.element;
    j["others"] = v.others;
    j["kind"] = violation_kind_name(v.kind);
    j["cc"] = v.cc;
    j["euler"] = v.euler.str();
    if (v.has_evidence) {
      const Vec3 p = denorm ? denorm->to_original(v.evidence) : v.evidence;
      j["evidence"] = {p.x(), p.y(), p.z()};
    }
    os << j.dump() << '\n';
  }
  return os.str();
}

namespace {

void push_checks(TopoReport& rep, Index sphere, const std::string& element, std::vector<Index> others,
                 const ElementStat& st, const Vec3* evidence) {
  const Rational one(1);
  auto make = [&](ViolationKind kind) {
    TopoViolation v;
    v.sphere = sphere;
    v.element = element;
    v.others = others;
    v.kind = kind;
    v.cc = st.cc;
    v.euler = st.euler;
    if (evidence) {
      v.evidence = *evidence;
      v.has_evidence = true;
    }
    rep.violations.push_back(std::move(v));
  };
  if (element == "rpv") {
    if (st.cc != 1 || st.euler != one) make(ViolationKind::kMultiplicity);
    return;
  }
  if (st.cc != 1) {
    make(ViolationKind::kCC);
  } else if (st.euler != one) {
    make(ViolationKind::kEuler);
  }
}

}  // namespace

TopoReport check_topology(const std::vector<RestrictedElements>& elements) {
  TopoReport rep;
  for (const RestrictedElements& R : elements) {
    if (R.empty()) continue;
    const Index i = R.sphere;
    const Vec3* ev = R.surface.empty() ? nullptr : &R.surface.front().centroid;
    push_checks(rep, i, "rpc", {}, {R.rpc_euler, R.rpc_cc}, ev);
    for (const auto& [j, st] : R.rpf) {
      if (j < i) continue;
      auto it = R.rpf_contacts.find(j);
      push_checks(rep, i, "rpf", {j}, st,
                  it != R.rpf_contacts.end() && !it->second.empty() ? &it->second.front().point : nullptr);
    }
    for (const auto& [key, st] : R.rpe) {
      if (key.first < i) continue;
      auto it = R.rpe_contacts.find(key);
      push_checks(rep, i, "rpe", {key.first, key.second}, st,
                  it != R.rpe_contacts.end() && !it->second.empty() ? &it->second.front().point : nullptr);
    }
    for (const auto& [key, st] : R.rpv) {
      if (key[0] < i) continue;
      push_checks(rep, i, "rpv", {key[0], key[1], key[2]}, st, nullptr);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Fix

namespace {

struct Pin {
  Vec3 point;
  Vec3 normal;
};

class CenterIndex {
 public:
  explicit CenterIndex(const SphereSet& spheres) {
    std::vector<Aabb> boxes;
    for (const MedialSphere& s : spheres.all()) {
      if (s.deleted) continue;
      centers_.push_back(s.center);
      Aabb b;
      b.extend(s.center);
      boxes.push_back(b);
    }
    bvh_.build(std::move(boxes));
  }
  void add(const Vec3& c) { extra_.push_back(c); }
  double distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    if (!bvh_.empty())
      best = bvh_.nearest(p, [&](Index i, double) { return (centers_[i] - p).squaredNorm(); }).second;
    for (const Vec3& c : extra_) best = std::min(best, (c - p).squaredNorm());
    return std::sqrt(best);
  }

 private:
  std::vector<Vec3> centers_;
  std::vector<Vec3> extra_;
  Bvh bvh_;
};

// Orders candidate pins by decreasing distance to the nearest sphere centre.
std::vector<Pin> by_remoteness(std::vector<Pin> pins, const CenterIndex& centers) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t k = 0; k < pins.size(); ++k) order.emplace_back(-centers.distance(pins[k].point), k);
  std::stable_sort(order.begin(), order.end());
  std::vector<Pin> out;
  for (const auto& [d, k] : order) out.push_back(pins[k]);
  return out;
}

Pin nearest_surface_pin(const SurfaceIndex& surface, const Vec3& p) {
  const SurfaceIndex::Hit h = surface.nearest(p);
  return {h.point, h.normal};
}

Vec3 mean(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return pts.empty() ? c : Vec3(c / static_cast<double>(pts.size()));
}

}  // namespace

std::vector<MedialSphere> fix_topology(const TopoReport& report, const std::vector<RestrictedElements>& elements,
                                       const RpdEngine& rpd, const SphereSet& spheres, const SurfaceIndex& surface,
                                       const TopoFixParams& params, TopoFixStats* stats) {
  (void)rpd;
  std::vector<MedialSphere> out;
  CenterIndex centers(spheres);
  TopoFixStats local;
  TopoFixStats& st = stats ? *stats : local;

  auto accept = [&](const MedialSphere& m) {
    if (!m.center.allFinite() || !std::isfinite(m.radius) || m.radius <= 0) return false;
    if (spheres.find_duplicate(m) != kInvalidIndex) return false;
    for (const MedialSphere& o : out) {
      const double d = (o.center - m.center).norm();
      if (d == 0.0 || (d < spheres.dedup_radius() && std::abs(o.radius - m.radius) < spheres.dedup_radius()))
        return false;
    }
    return true;
  };
  // Tries candidates in order until one yields a new sphere.
  auto insert_from = [&](const std::vector<Pin>& cands) {
    int tried = 0;
    for (const Pin& pin : cands) {
      if (tried++ >= params.max_candidates) break;
      ++st.pins_tried;
      MedialSphere m = sphere_shrink(surface, pin.point, pin.normal, params.shrink);
      if (!accept(m)) {
        ++st.duplicates;
        continue;
      }
      centers.add(m.center);
      out.push_back(std::move(m));
      return true;
    }
    return false;
  };

  for (const TopoViolation& v : report.violations) {
    const RestrictedElements& R = elements[v.sphere];
    const MedialSphere& owner = spheres[v.sphere];
    if (v.element == "rpc") {
      if (v.kind == ViolationKind::kCC) {
        // Own component: the one holding the cell nearest the centre.
        const auto& cells = rpd.cells(v.sphere);
        int own = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cells.size(); ++c) {
          const double d = (cells[c].cell.centroid() - owner.center).squaredNorm();
          if (d < best) {
            best = d;
            own = R.cell_component[c];
          }
        }
        for (int comp = 0; comp < R.rpc_cc; ++comp) {
          if (comp == own) continue;
          std::vector<Pin> cands;
          for (const SurfaceFacet& f : R.surface)
            if (f.component == comp) cands.push_back({f.centroid, f.normal});
          if (cands.empty()) {
            std::vector<Vec3> pts;
            for (std::size_t c = 0; c < cells.size(); ++c)
              if (R.cell_component[c] == comp) pts.push_back(cells[c].cell.centroid());
            cands.push_back(nearest_surface_pin(surface, mean(pts)));
            ++st.fallback_pins;
          }
          insert_from(by_remoteness(std::move(cands), centers));
        }
      } else {
        // Farthest surface facet from the centre first.
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t k = 0; k < R.surface.size(); ++k)
          order.emplace_back(-(R.surface[k].centroid - owner.center).squaredNorm(), k);
        std::stable_sort(order.begin(), order.end());
        std::vector<Pin> cands;
        for (const auto& [d, k] : order) cands.push_back({R.surface[k].centroid, R.surface[k].normal});
        if (cands.empty()) {
          cands.push_back(nearest_surface_pin(surface, owner.center));
          ++st.fallback_pins;
        }
        insert_from(cands);
      }
      continue;
    }

    std::vector<SurfaceContact> contacts;
    std::vector<Vec3> points;
    int ncomp = 1;
    if (v.element == "rpf") {
      const Index j = v.others[0];
      if (auto it = R.rpf_contacts.find(j); it != R.rpf_contacts.end()) contacts = it->second;
      if (auto it = R.rpf_points.find(j); it != R.rpf_points.end()) points = it->second;
      ncomp = R.rpf.at(j).cc;
    } else if (v.element == "rpe") {
      const auto key = std::make_pair(v.others[0], v.others[1]);
      if (auto it = R.rpe_contacts.find(key); it != R.rpe_contacts.end()) contacts = it->second;
      if (auto it = R.rpe_points.find(key); it != R.rpe_points.end()) points = it->second;
      ncomp = R.rpe.at(key).cc;
    }
    if (v.kind == ViolationKind::kCC && ncomp > 1) {
      // One sphere for every component but the first.
      for (int comp = 1; comp < ncomp; ++comp) {
        std::vector<Pin> cands;
        for (const SurfaceContact& c : contacts)
          if (c.component == comp) cands.push_back({c.point, c.normal});
        if (cands.empty()) continue;
        insert_from(by_remoteness(std::move(cands), centers));
      }
      continue;
    }
    std::vector<Pin> cands;
    for (const SurfaceContact& c : contacts) cands.push_back({c.point, c.normal});
    if (cands.empty()) {
      cands.push_back(nearest_surface_pin(surface, points.empty() ? owner.center : mean(points)));
      ++st.fallback_pins;
    }
    insert_from(by_remoteness(std::move(cands), centers));
  }
  return out;
}

std::vector<MedialSphere> check_and_fix_topology(const RpdEngine& rpd, const SphereSet& spheres,
                                                 const SurfaceIndex& surface, const TopoFixParams& params,
                                                 TopoReport* report_out, int threads) {
  const auto elements = accumulate_euler(rpd, threads);
  TopoReport report = check_topology(elements);
  auto out = fix_topology(report, elements, rpd, spheres, surface, params);
  if (report_out) *report_out = std::move(report);
  return out;
}

}  // namespace mattopo
