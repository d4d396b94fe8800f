#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sgrel/scene_graph.hpp"

namespace sgrel {

/// Evaluation regimes, ordered by decreasing prior knowledge: known boxes and
/// labels, known boxes only, or detection from scratch (IoU-gated matching).
enum class EvalMode { PREDCLS, SGCLS, SGDET };

enum class RecallAveraging { MICRO, PER_IMAGE };

/// Whether the ranked prediction at `pred` hits ground-truth `gt`. In
/// PREDCLS/SGCLS node identity is given: indices, labels and relation must
/// all agree. In SGDET labels and relation must agree and both boxes need
/// IoU >= 0.5 against the ground truth's.
bool match_predicate(const SceneGraph& pred_graph, const PredicateCandidate& pred,
                     const SceneGraph& gt_graph, const GtPredicate& gt, EvalMode mode);

/// A prediction/ground-truth pair for one image. The two graphs may be the
/// same object when predictions were attached in place.
struct GraphPair {
  const SceneGraph* pred;
  const SceneGraph* gt;
};

/// Recall over top-k predictions per image: each ground-truth predicate is
/// matched by at most one prediction, assigned greedily in confidence order.
/// MICRO averages matched/total over the dataset; PER_IMAGE averages
/// per-image ratios. Throws NoGroundTruth if the dataset carries no gt.
double recall_at_k(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                   RecallAveraging avg = RecallAveraging::MICRO);

/// Per-relation-class recall restricted to that class's ground truth (top-k
/// selection unchanged), averaged over classes with at least one instance.
/// `per_class` (optional) receives the individual class recalls.
double mean_recall_at_k(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                        std::map<int, double>* per_class = nullptr);

/// recall_at_k counting only ground truth whose label-level triplet never
/// occurs in `train_triplets`. Throws NoZeroShotGroundTruth when nothing
/// qualifies.
double zero_shot_recall(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                        const std::set<Triplet>& train_triplets);

enum class MapMode { RELATIONSHIP, PHRASE };

/// Per-relation-class average precision over the dataset-wide ranked
/// predictions (all-point interpolation), weighted by each class's share of
/// the ground truth. RELATIONSHIP matches like SGDET; PHRASE matches the
/// union of subject and object boxes at IoU >= 0.5.
double weighted_map(const std::vector<GraphPair>& graphs, MapMode mode);

/// 0.2 * r50 + 0.4 * wmap_rel + 0.4 * wmap_phr, on whatever common scale the
/// inputs use.
double composite_score(double r50, double wmap_rel, double wmap_phr);

struct EvalReport {
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> mean_recall;
  std::map<int, std::map<std::size_t, double>> per_class_recall;  // relation -> k -> value
  std::map<std::size_t, double> zero_shot;                        // empty if not computed
  double wmap_rel = 0.0;
  double wmap_phr = 0.0;
  double composite = 0.0;
  bool has_zero_shot = false;
};

/// Full metric suite. zsR@k rows appear only when train_triplets is
/// non-null; images with zero-shot gt absent leave has_zero_shot false
/// rather than failing the whole report. The composite uses R@50 (percent)
/// and the wmAPs (percent).
EvalReport evaluate(const std::vector<GraphPair>& graphs, const std::vector<std::size_t>& ks,
                    EvalMode mode, const std::set<Triplet>* train_triplets = nullptr,
                    RecallAveraging avg = RecallAveraging::MICRO);

/// Fixed-order human-readable table (R@k rows, mR@k rows, zsR rows when
/// present, wmAPs, composite score).
std::string format_report_table(const EvalReport& report);

}  // namespace sgrel
