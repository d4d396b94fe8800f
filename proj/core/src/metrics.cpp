#include "sgrel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sgrel/errors.hpp"
#include "sgrel/geometry.hpp"
#include "sgrel/relation_head.hpp"

namespace sgrel {
namespace {

constexpr double kIouThreshold = 0.5;

bool in_range(int idx, const std::vector<ObjectInstance>& objects) {
  return idx >= 0 && idx < static_cast<int>(objects.size());
}

bool labels_agree(const SceneGraph& pg, const PredicateCandidate& p, const SceneGraph& gg,
                  const GtPredicate& g) {
  return pg.objects[static_cast<std::size_t>(p.subject_idx)].label ==
             gg.objects[static_cast<std::size_t>(g.subject_idx)].label &&
         pg.objects[static_cast<std::size_t>(p.object_idx)].label ==
             gg.objects[static_cast<std::size_t>(g.object_idx)].label;
}

// Phrase-level match: one IoU test on the subject+object union boxes.
bool phrase_match(const SceneGraph& pg, const PredicateCandidate& p, const SceneGraph& gg,
                  const GtPredicate& g) {
  if (p.relation != g.relation) return false;
  if (!in_range(p.subject_idx, pg.objects) || !in_range(p.object_idx, pg.objects) ||
      !in_range(g.subject_idx, gg.objects) || !in_range(g.object_idx, gg.objects))
    return false;
  if (!labels_agree(pg, p, gg, g)) return false;
  const BoundingBox pu = union_box(pg.objects[static_cast<std::size_t>(p.subject_idx)].box,
                                   pg.objects[static_cast<std::size_t>(p.object_idx)].box);
  const BoundingBox gu = union_box(gg.objects[static_cast<std::size_t>(g.subject_idx)].box,
                                   gg.objects[static_cast<std::size_t>(g.object_idx)].box);
  return iou(pu, gu) >= kIouThreshold;
}

// Greedy one-to-one assignment of ranked predictions to ground truth: each
// prediction claims the first unmatched gt it hits. Returns per-gt matched
// flags aligned with `gt`.
template <typename MatchFn>
std::vector<bool> greedy_match(const std::vector<PredicateCandidate>& ranked,
                               const std::vector<GtPredicate>& gt, MatchFn&& matches) {
  std::vector<bool> used(gt.size(), false);
  for (const PredicateCandidate& cand : ranked) {
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (used[gi]) continue;
      if (matches(cand, gt[gi])) {
        used[gi] = true;
        break;
      }
    }
  }
  return used;
}

struct ImageTally {
  std::size_t matched = 0;
  std::size_t total = 0;
  std::map<int, std::size_t> matched_by_class;
  std::map<int, std::size_t> total_by_class;
};

// One image's matching outcome under top-k selection. `keep_gt` filters the
// ground-truth set before matching (zero-shot evaluation).
template <typename KeepFn>
ImageTally tally_image(const GraphPair& gp, std::size_t k, EvalMode mode, KeepFn&& keep_gt) {
  ImageTally t;
  std::vector<GtPredicate> gt;
  for (const GtPredicate& g : gp.gt->gt_predicates)
    if (keep_gt(g)) gt.push_back(g);
  t.total = gt.size();
  for (const GtPredicate& g : gt) ++t.total_by_class[g.relation];
  if (gt.empty()) return t;

  const std::vector<PredicateCandidate> ranked = rank_graph(gp.pred->pred_candidates, k);
  const std::vector<bool> used =
      greedy_match(ranked, gt, [&](const PredicateCandidate& c, const GtPredicate& g) {
        return match_predicate(*gp.pred, c, *gp.gt, g, mode);
      });
  for (std::size_t gi = 0; gi < gt.size(); ++gi) {
    if (!used[gi]) continue;
    ++t.matched;
    ++t.matched_by_class[gt[gi].relation];
  }
  return t;
}

double average_precision(const std::vector<bool>& tp_sequence, std::size_t gt_count) {
  if (gt_count == 0) return 0.0;
  std::vector<double> prec, rec;
  std::size_t tp = 0, seen = 0;
  for (bool is_tp : tp_sequence) {
    ++seen;
    if (is_tp) ++tp;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
  }
  // Precision envelope (max to the right), then sum over recall steps.
  for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  double prev_rec = 0.0;
  for (std::size_t i = 0; i < prec.size(); ++i) {
    ap += (rec[i] - prev_rec) * prec[i];
    prev_rec = rec[i];
  }
  return ap;
}

}  // namespace

bool match_predicate(const SceneGraph& pred_graph, const PredicateCandidate& pred,
                     const SceneGraph& gt_graph, const GtPredicate& gt, EvalMode mode) {
  if (pred.relation != gt.relation) return false;
  if (!in_range(pred.subject_idx, pred_graph.objects) ||
      !in_range(pred.object_idx, pred_graph.objects) ||
      !in_range(gt.subject_idx, gt_graph.objects) || !in_range(gt.object_idx, gt_graph.objects))
    return false;

  if (mode == EvalMode::SGDET) {
    if (!labels_agree(pred_graph, pred, gt_graph, gt)) return false;
    const auto& ps = pred_graph.objects[static_cast<std::size_t>(pred.subject_idx)];
    const auto& po = pred_graph.objects[static_cast<std::size_t>(pred.object_idx)];
    const auto& gs = gt_graph.objects[static_cast<std::size_t>(gt.subject_idx)];
    const auto& go = gt_graph.objects[static_cast<std::size_t>(gt.object_idx)];
    return iou(ps.box, gs.box) >= kIouThreshold && iou(po.box, go.box) >= kIouThreshold;
  }
  // PREDCLS/SGCLS: boxes are given, so node identity is positional.
  return pred.subject_idx == gt.subject_idx && pred.object_idx == gt.object_idx &&
         labels_agree(pred_graph, pred, gt_graph, gt);
}

double recall_at_k(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                   RecallAveraging avg) {
  std::size_t matched = 0, total = 0;
  double ratio_sum = 0.0;
  std::size_t images_with_gt = 0;
  for (const GraphPair& gp : graphs) {
    const ImageTally t = tally_image(gp, k, mode, [](const GtPredicate&) { return true; });
    matched += t.matched;
    total += t.total;
    if (t.total > 0) {
      ++images_with_gt;
      ratio_sum += static_cast<double>(t.matched) / static_cast<double>(t.total);
    }
  }
  if (total == 0) throw NoGroundTruth("dataset has no ground-truth predicates");
  if (avg == RecallAveraging::PER_IMAGE)
    return ratio_sum / static_cast<double>(images_with_gt);
  return static_cast<double>(matched) / static_cast<double>(total);
}

double mean_recall_at_k(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                        std::map<int, double>* per_class) {
  std::map<int, std::size_t> matched, total;
  for (const GraphPair& gp : graphs) {
    const ImageTally t = tally_image(gp, k, mode, [](const GtPredicate&) { return true; });
    for (const auto& [rel, cnt] : t.total_by_class) total[rel] += cnt;
    for (const auto& [rel, cnt] : t.matched_by_class) matched[rel] += cnt;
  }
  if (total.empty()) throw NoGroundTruth("dataset has no ground-truth predicates");
  if (per_class) per_class->clear();
  double sum = 0.0;
  for (const auto& [rel, cnt] : total) {
    const double r = static_cast<double>(matched.count(rel) ? matched[rel] : 0) /
                     static_cast<double>(cnt);
    if (per_class) (*per_class)[rel] = r;
    sum += r;
  }
  return sum / static_cast<double>(total.size());
}

double zero_shot_recall(const std::vector<GraphPair>& graphs, std::size_t k, EvalMode mode,
                        const std::set<Triplet>& train_triplets) {
  std::size_t matched = 0, total = 0;
  for (const GraphPair& gp : graphs) {
    const ImageTally t = tally_image(gp, k, mode, [&](const GtPredicate& g) {
      return !train_triplets.contains(gp.gt->label_triplet(g));
    });
    matched += t.matched;
    total += t.total;
  }
  if (total == 0) throw NoZeroShotGroundTruth("no ground truth outside the training triplets");
  return static_cast<double>(matched) / static_cast<double>(total);
}

double weighted_map(const std::vector<GraphPair>& graphs, MapMode mode) {
  struct RankedPred {
    std::size_t image;
    const PredicateCandidate* cand;
  };
  std::vector<RankedPred> ranked;
  std::map<int, std::size_t> gt_count;
  std::size_t gt_total = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (const PredicateCandidate& c : graphs[i].pred->pred_candidates) ranked.push_back({i, &c});
    for (const GtPredicate& g : graphs[i].gt->gt_predicates) {
      ++gt_count[g.relation];
      ++gt_total;
    }
  }
  if (gt_total == 0) throw NoGroundTruth("dataset has no ground-truth predicates");

  std::sort(ranked.begin(), ranked.end(), [](const RankedPred& a, const RankedPred& b) {
    if (a.cand->confidence != b.cand->confidence) return a.cand->confidence > b.cand->confidence;
    if (a.image != b.image) return a.image < b.image;
    if (a.cand->subject_idx != b.cand->subject_idx) return a.cand->subject_idx < b.cand->subject_idx;
    if (a.cand->object_idx != b.cand->object_idx) return a.cand->object_idx < b.cand->object_idx;
    return a.cand->relation < b.cand->relation;
  });

  // Per-image per-predicate matched flags; only same-relation predictions
  // compete for a gt, so one global greedy pass equals per-class passes.
  std::vector<std::vector<bool>> used(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i)
    used[i].assign(graphs[i].gt->gt_predicates.size(), false);

  std::map<int, std::vector<bool>> tp_by_class;
  for (const RankedPred& rp : ranked) {
    const GraphPair& gp = graphs[rp.image];
    bool hit = false;
    for (std::size_t gi = 0; gi < gp.gt->gt_predicates.size(); ++gi) {
      if (used[rp.image][gi]) continue;
      const GtPredicate& g = gp.gt->gt_predicates[gi];
      const bool m = mode == MapMode::RELATIONSHIP
                         ? match_predicate(*gp.pred, *rp.cand, *gp.gt, g, EvalMode::SGDET)
                         : phrase_match(*gp.pred, *rp.cand, *gp.gt, g);
      if (m) {
        used[rp.image][gi] = true;
        hit = true;
        break;
      }
    }
    tp_by_class[rp.cand->relation].push_back(hit);
  }

  double wmap = 0.0;
  for (const auto& [rel, cnt] : gt_count) {
    const double weight = static_cast<double>(cnt) / static_cast<double>(gt_total);
    const auto it = tp_by_class.find(rel);
    const double ap = average_precision(it == tp_by_class.end() ? std::vector<bool>{} : it->second,
                                        cnt);
    wmap += weight * ap;
  }
  return wmap;
}

double composite_score(double r50, double wmap_rel, double wmap_phr) {
  return 0.2 * r50 + 0.4 * wmap_rel + 0.4 * wmap_phr;
}

EvalReport evaluate(const std::vector<GraphPair>& graphs, const std::vector<std::size_t>& ks,
                    EvalMode mode, const std::set<Triplet>* train_triplets, RecallAveraging avg) {
  EvalReport report;
  for (std::size_t k : ks) {
    report.recall[k] = recall_at_k(graphs, k, mode, avg);
    std::map<int, double> per_class;
    report.mean_recall[k] = mean_recall_at_k(graphs, k, mode, &per_class);
    for (const auto& [rel, val] : per_class) report.per_class_recall[rel][k] = val;
  }
  if (train_triplets) {
    for (std::size_t k : {std::size_t{50}, std::size_t{100}}) {
      try {
        report.zero_shot[k] = zero_shot_recall(graphs, k, mode, *train_triplets);
        report.has_zero_shot = true;
      } catch (const NoZeroShotGroundTruth&) {
        break;  // same gt filter for every k; no point retrying
      }
    }
  }
  report.wmap_rel = weighted_map(graphs, MapMode::RELATIONSHIP);
  report.wmap_phr = weighted_map(graphs, MapMode::PHRASE);
  const double r50 = report.recall.count(50) ? report.recall.at(50)
                                             : recall_at_k(graphs, 50, mode, avg);
  report.composite =
      composite_score(100.0 * r50, 100.0 * report.wmap_rel, 100.0 * report.wmap_phr);
  return report;
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  auto row = [&](const std::string& name, double value) {
    out << std::left << std::setw(12) << name << std::right << std::setw(8) << value << "\n";
  };
  for (const auto& [k, v] : report.recall) row("R@" + std::to_string(k), 100.0 * v);
  for (const auto& [k, v] : report.mean_recall) row("mR@" + std::to_string(k), 100.0 * v);
  for (const auto& [k, v] : report.zero_shot) row("zsR@" + std::to_string(k), 100.0 * v);
  row("wmAP_rel", 100.0 * report.wmap_rel);
  row("wmAP_phr", 100.0 * report.wmap_phr);
  row("score", report.composite);
  return out.str();
}

}  // namespace sgrel
