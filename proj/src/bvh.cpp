#include "mattopo/bvh.h"

#include <algorithm>
#include <numeric>

namespace mattopo {

namespace {
constexpr Index kLeafSize = 4;
}

void Bvh::build(std::vector<Aabb> boxes) {
  boxes_ = std::move(boxes);
  items_.resize(boxes_.size());
  std::iota(items_.begin(), items_.end(), 0);
  nodes_.clear();
  if (boxes_.empty()) return;
  std::vector<Vec3> centers(boxes_.size());
  for (std::size_t i = 0; i < boxes_.size(); ++i) centers[i] = boxes_[i].center();
  nodes_.reserve(2 * boxes_.size() / kLeafSize + 2);
  nodes_.emplace_back();
  build_node(0, 0, static_cast<Index>(items_.size()), centers);
}

// Fills node `self` with the subtree over items_[begin, end), splitting at the
// median of the widest centroid axis. Children of a node are contiguous.
void Bvh::build_node(Index self, Index begin, Index end, std::vector<Vec3>& centers) {
  Aabb box, cbox;
  for (Index k = begin; k < end; ++k) {
    box.extend(boxes_[items_[k]]);
    cbox.extend(centers[items_[k]]);
  }
  nodes_[self].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[self].first = begin;
    nodes_[self].count = end - begin;
    return;
  }
  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const Index mid = begin + (end - begin) / 2;
  std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                   [&](Index a, Index b) {
                     if (centers[a][axis] != centers[b][axis]) return centers[a][axis] < centers[b][axis];
                     return a < b;
                   });
  const Index left = static_cast<Index>(nodes_.size());
  nodes_.emplace_back();
  nodes_.emplace_back();
  nodes_[self].first = left;
  nodes_[self].count = 0;
  build_node(left, begin, mid, centers);
  build_node(left + 1, mid, end, centers);
}

}  // namespace mattopo
