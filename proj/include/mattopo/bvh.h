#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "mattopo/common.h"

namespace mattopo {

/// Bounding volume hierarchy over axis-aligned boxes. Items are referenced by
/// their index in the box array given to build(); the tree is immutable
/// after construction.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(std::vector<Aabb> boxes) { build(std::move(boxes)); }

  void build(std::vector<Aabb> boxes);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return items_.size(); }
  const Aabb& item_box(Index i) const { return boxes_[i]; }

  template <class F>
  void for_each_overlap(const Aabb& query, F&& f) const {
    if (nodes_.empty()) return;
    Index stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (!n.box.overlaps(query)) continue;
      if (n.count > 0) {
        for (Index k = n.first; k < n.first + n.count; ++k)
          if (boxes_[items_[k]].overlaps(query)) f(items_[k]);
      } else {
        stack[top++] = n.first;
        stack[top++] = n.first + 1;
      }
    }
  }

  template <class F>
  void for_each_containing(const Vec3& p, F&& f) const {
    Aabb q;
    q.extend(p);
    for_each_overlap(q, std::forward<F>(f));
  }

  /// Best-first search. `item_cost(i, bound)` returns the exact cost of item i
  /// (e.g. squared distance); boxes whose squared distance to `p` is not below
  /// the current bound are skipped. Returns (item, cost) with item == -1 when
  /// nothing beats `bound`.
  template <class F>
  std::pair<Index, double> nearest(const Vec3& p, F&& item_cost,
                                   double bound = std::numeric_limits<double>::infinity()) const {
    Index best = kInvalidIndex;
    if (nodes_.empty()) return {best, bound};
    struct Entry {
      Index node;
      double d;
    };
    Entry stack[64];
    int top = 0;
    stack[top++] = {0, nodes_[0].box.squared_distance(p)};
    while (top > 0) {
      const Entry e = stack[--top];
      if (e.d >= bound) continue;
      const Node& n = nodes_[e.node];
      if (n.count > 0) {
        for (Index k = n.first; k < n.first + n.count; ++k) {
          const Index item = items_[k];
          if (boxes_[item].squared_distance(p) >= bound) continue;
          const double c = item_cost(item, bound);
          if (c < bound) {
            bound = c;
            best = item;
          }
        }
      } else {
        const Index a = n.first;
        const Index b = n.first + 1;
        const double da = nodes_[a].box.squared_distance(p);
        const double db = nodes_[b].box.squared_distance(p);
        // Push the farther child first so the nearer one is expanded next.
        if (da < db) {
          stack[top++] = {b, db};
          stack[top++] = {a, da};
        } else {
          stack[top++] = {a, da};
          stack[top++] = {b, db};
        }
      }
    }
    return {best, bound};
  }

 private:
  struct Node {
    Aabb box;
    Index first = 0;  // first item (leaf) or first child (inner)
    Index count = 0;  // > 0 for leaves
  };

  void build_node(Index self, Index begin, Index end, std::vector<Vec3>& centers);

  std::vector<Aabb> boxes_;
  std::vector<Index> items_;
  std::vector<Node> nodes_;
};

}  // namespace mattopo
