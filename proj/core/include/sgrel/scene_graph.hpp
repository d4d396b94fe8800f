#pragma once

#include <compare>
#include <set>
#include <string>
#include <vector>

#include "sgrel/geometry.hpp"

namespace sgrel {

/// One detected or annotated object: label index, box, detection confidence.
struct ObjectInstance {
  int label = 0;
  BoundingBox box;
  double score = 1.0;
};

/// Label-level (subject, relation, object) assertion, independent of nodes.
struct Triplet {
  int subject_label = 0;
  int relation = 0;
  int object_label = 0;

  auto operator<=>(const Triplet&) const = default;
};

/// Ground-truth edge between two nodes of one graph.
struct GtPredicate {
  int subject_idx = 0;
  int object_idx = 0;
  int relation = 0;

  auto operator<=>(const GtPredicate&) const = default;
};

/// One predicted edge: node pair, relation, its super-category, and the joint
/// probability used for ranking.
struct PredicateCandidate {
  int subject_idx = 0;
  int object_idx = 0;
  int relation = 0;
  int super_category = 0;
  double confidence = 0.0;
};

struct SceneGraph {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<ObjectInstance> objects;
  std::vector<GtPredicate> gt_predicates;
  std::vector<PredicateCandidate> pred_candidates;

  Triplet label_triplet(const GtPredicate& gt) const {
    return {objects[static_cast<std::size_t>(gt.subject_idx)].label, gt.relation,
            objects[static_cast<std::size_t>(gt.object_idx)].label};
  }
  Triplet label_triplet(const PredicateCandidate& c) const {
    return {objects[static_cast<std::size_t>(c.subject_idx)].label, c.relation,
            objects[static_cast<std::size_t>(c.object_idx)].label};
  }
};

/// Removes exact duplicate gt triplets in place, preserving first occurrences.
/// Returns the number of duplicates dropped (recall denominators must count
/// unique ground truths).
int dedupe_gt(SceneGraph& g);

/// Commonsense verdicts accumulated over a run; the two sets stay disjoint.
struct AlignmentSets {
  std::set<Triplet> aligned;
  std::set<Triplet> violated;

  /// Insert into one side; throws std::logic_error if the triplet is already
  /// on the other side.
  void add_aligned(const Triplet& t);
  void add_violated(const Triplet& t);
};

}  // namespace sgrel
