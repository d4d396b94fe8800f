#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sgrel/scene_graph.hpp"

namespace testsupport {

/// splitmix64; self-contained so generated cases are identical on every
/// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  double gauss() {
    const double u1 = uniform01() + 1e-12;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sgrel-test-" + tag + "-" + std::to_string(++counter) + "-" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Reference matching and recall, written directly from the evaluation rules
// rather than on top of the library. Kept deliberately naive.

inline double ref_iou(const sgrel::BoundingBox& a, const sgrel::BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

enum class RefMode { PREDCLS, SGCLS, SGDET };

inline bool ref_match(const sgrel::SceneGraph& pg, const sgrel::PredicateCandidate& p,
                      const sgrel::SceneGraph& gg, const sgrel::GtPredicate& g, RefMode mode) {
  if (p.relation != g.relation) return false;
  const auto& ps = pg.objects[static_cast<std::size_t>(p.subject_idx)];
  const auto& po = pg.objects[static_cast<std::size_t>(p.object_idx)];
  const auto& gs = gg.objects[static_cast<std::size_t>(g.subject_idx)];
  const auto& go = gg.objects[static_cast<std::size_t>(g.object_idx)];
  if (ps.label != gs.label || po.label != go.label) return false;
  if (mode == RefMode::SGDET)
    return ref_iou(ps.box, gs.box) >= 0.5 && ref_iou(po.box, go.box) >= 0.5;
  return p.subject_idx == g.subject_idx && p.object_idx == g.object_idx;
}

/// Ranked order: confidence descending, then subject/object/relation
/// ascending, truncated to k (k = 0 keeps everything).
inline std::vector<sgrel::PredicateCandidate> ref_rank(
    std::vector<sgrel::PredicateCandidate> cands, std::size_t k) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const sgrel::PredicateCandidate& a, const sgrel::PredicateCandidate& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     if (a.subject_idx != b.subject_idx) return a.subject_idx < b.subject_idx;
                     if (a.object_idx != b.object_idx) return a.object_idx < b.object_idx;
                     return a.relation < b.relation;
                   });
  if (k > 0 && cands.size() > k) cands.resize(k);
  return cands;
}

/// Greedy assignment: each ranked prediction claims the first unmatched
/// ground truth it matches. Returns per-gt flags.
inline std::vector<bool> ref_greedy(const sgrel::SceneGraph& pg,
                                    const std::vector<sgrel::PredicateCandidate>& ranked,
                                    const sgrel::SceneGraph& gg,
                                    const std::vector<sgrel::GtPredicate>& gt, RefMode mode) {
  std::vector<bool> used(gt.size(), false);
  for (const auto& cand : ranked) {
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (!used[gi] && ref_match(pg, cand, gg, gt[gi], mode)) {
        used[gi] = true;
        break;
      }
    }
  }
  return used;
}

struct RefPair {
  const sgrel::SceneGraph* pred;
  const sgrel::SceneGraph* gt;
};

inline double ref_recall(const std::vector<RefPair>& graphs, std::size_t k, RefMode mode) {
  std::size_t matched = 0, total = 0;
  for (const RefPair& gp : graphs) {
    const auto ranked = ref_rank(gp.pred->pred_candidates, k);
    const auto used = ref_greedy(*gp.pred, ranked, *gp.gt, gp.gt->gt_predicates, mode);
    total += gp.gt->gt_predicates.size();
    for (bool u : used) matched += u ? 1 : 0;
  }
  return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

/// Definitional mean recall: one full matching pass per relation class with
/// the ground truth restricted to that class, averaged over classes with gt.
inline double ref_mean_recall(const std::vector<RefPair>& graphs, std::size_t k, RefMode mode) {
  std::vector<int> classes;
  for (const RefPair& gp : graphs)
    for (const auto& g : gp.gt->gt_predicates)
      if (std::find(classes.begin(), classes.end(), g.relation) == classes.end())
        classes.push_back(g.relation);
  if (classes.empty()) return 0.0;
  // Sum in ascending class order so the result is bit-for-bit reproducible.
  std::sort(classes.begin(), classes.end());
  double sum = 0.0;
  for (int rel : classes) {
    std::size_t matched = 0, total = 0;
    for (const RefPair& gp : graphs) {
      std::vector<sgrel::GtPredicate> gt;
      for (const auto& g : gp.gt->gt_predicates)
        if (g.relation == rel) gt.push_back(g);
      const auto ranked = ref_rank(gp.pred->pred_candidates, k);
      const auto used = ref_greedy(*gp.pred, ranked, *gp.gt, gt, mode);
      total += gt.size();
      for (bool u : used) matched += u ? 1 : 0;
    }
    sum += total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
  }
  return sum / static_cast<double>(classes.size());
}

/// Definitional zero-shot recall: drop ground truth whose label triplet
/// appears in the training set, then plain recall on what remains.
inline double ref_zero_shot(const std::vector<RefPair>& graphs, std::size_t k, RefMode mode,
                            const std::set<sgrel::Triplet>& train) {
  std::size_t matched = 0, total = 0;
  for (const RefPair& gp : graphs) {
    std::vector<sgrel::GtPredicate> gt;
    for (const auto& g : gp.gt->gt_predicates)
      if (!train.contains(gp.gt->label_triplet(g))) gt.push_back(g);
    const auto ranked = ref_rank(gp.pred->pred_candidates, k);
    const auto used = ref_greedy(*gp.pred, ranked, *gp.gt, gt, mode);
    total += gt.size();
    for (bool u : used) matched += u ? 1 : 0;
  }
  return total == 0 ? -1.0 : static_cast<double>(matched) / static_cast<double>(total);
}

/// Random tiny instance: <= 5 objects, <= 8 relations, continuous
/// confidences so ranking ties cannot occur.
inline sgrel::SceneGraph random_tiny_graph(Rng& rng, int num_labels, int num_relations) {
  sgrel::SceneGraph g;
  g.width = 100.0;
  g.height = 100.0;
  const int n = 2 + rng.below(4);  // 2..5 objects
  for (int i = 0; i < n; ++i) {
    sgrel::ObjectInstance o;
    o.label = rng.below(num_labels);
    o.box = {rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(5, 40), rng.uniform(5, 40)};
    o.score = rng.uniform(0.1, 1.0);
    g.objects.push_back(o);
  }
  const int gts = 1 + rng.below(4);
  std::set<std::tuple<int, int, int>> seen;
  for (int i = 0; i < gts; ++i) {
    sgrel::GtPredicate gt;
    gt.subject_idx = rng.below(n);
    gt.object_idx = rng.below(n);
    gt.relation = rng.below(num_relations);
    if (seen.insert({gt.subject_idx, gt.object_idx, gt.relation}).second)
      g.gt_predicates.push_back(gt);
  }
  const int preds = rng.below(13);
  for (int i = 0; i < preds; ++i) {
    sgrel::PredicateCandidate c;
    c.subject_idx = rng.below(n);
    c.object_idx = rng.below(n);
    c.relation = rng.below(num_relations);
    c.super_category = c.relation % 3;
    c.confidence = rng.uniform01();
    // Half of the predictions copy a gt edge so matches actually happen.
    if (i % 2 == 0 && !g.gt_predicates.empty()) {
      const int pick = rng.below(static_cast<int>(g.gt_predicates.size()));
      const auto& gt = g.gt_predicates[static_cast<std::size_t>(pick)];
      c.subject_idx = gt.subject_idx;
      c.object_idx = gt.object_idx;
      c.relation = gt.relation;
    }
    g.pred_candidates.push_back(c);
  }
  return g;
}

}  // namespace testsupport
