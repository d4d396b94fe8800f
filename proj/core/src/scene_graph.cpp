#include "sgrel/scene_graph.hpp"

#include <stdexcept>

namespace sgrel {

int dedupe_gt(SceneGraph& g) {
  std::set<GtPredicate> seen;
  std::vector<GtPredicate> unique;
  unique.reserve(g.gt_predicates.size());
  int dropped = 0;
  for (const auto& gt : g.gt_predicates) {
    if (seen.insert(gt).second) {
      unique.push_back(gt);
    } else {
      ++dropped;
    }
  }
  g.gt_predicates = std::move(unique);
  return dropped;
}

void AlignmentSets::add_aligned(const Triplet& t) {
  if (violated.contains(t)) {
    throw std::logic_error("triplet is already in the violated set");
  }
  aligned.insert(t);
}

void AlignmentSets::add_violated(const Triplet& t) {
  if (aligned.contains(t)) {
    throw std::logic_error("triplet is already in the aligned set");
  }
  violated.insert(t);
}

}  // namespace sgrel
