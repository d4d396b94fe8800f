#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sgrel/relation_head.hpp"
#include "sgrel/scene_graph.hpp"
#include "sgrel/vocabulary.hpp"

namespace sgrel {

/// Weights for the three trainable loss terms plus the contrastive
/// temperature. The distillation penalty is a standalone per-predicate term
/// and has its own lambdas.
struct LossWeights {
  double w_sup = 1.0;
  double w_sub = 1.0;
  double w_con = 1.0;
  double temperature = 0.1;
};

/// One labeled directed pair. When `raw` is non-empty the feature is
/// w_proj^T raw + b_proj and gradients flow into the projection; otherwise
/// `x` is consumed as-is. target_rel is a global relation index; it must lie
/// in target_sc's category, and is ignored when target_sc is background (3).
struct TrainingSample {
  Eigen::VectorXd x;
  Eigen::VectorXd raw;
  int target_sc = 3;
  int target_rel = -1;
};

/// Per-parameter gradients, same shapes as HeadParameters. The flat head is
/// untouched by the hierarchical losses; its slot stays zero when present.
struct GradientSet {
  Eigen::MatrixXd w_proj;
  Eigen::VectorXd b_proj;
  Eigen::MatrixXd w_sc;
  Eigen::VectorXd b_sc;
  std::array<Eigen::MatrixXd, 3> w_cat;
  std::array<Eigen::VectorXd, 3> b_cat;
  std::optional<Eigen::MatrixXd> w_flat;
  std::optional<Eigen::VectorXd> b_flat;

  static GradientSet zeros_like(const HeadParameters& p);
};

/// Negative log likelihood of the target super-category. Probabilities are
/// clamped to 1e-12 before the log.
double loss_super(const ComposedDistribution& cd, int target_sc);

/// Negative log of the joint probability of the target relation; exactly 0
/// for background targets. Throws TargetCategoryMismatch when target_rel is
/// not in target_sc's category.
double loss_sub(const ComposedDistribution& cd, int target_sc, int target_rel,
                const RelationHierarchy& h);

/// Supervised contrastive loss over pair features with dot-product
/// similarity. For each anchor a with positives P(a) (same label, not self)
/// and negatives N(a): sum over p of
///   -log( exp(x_a.x_p / tau) / sum_n exp(x_a.x_n / tau) ),
/// divided by |P(a)|, then averaged over anchors with |P| > 0. Anchors with
/// empty P or empty N contribute 0. May be negative.
double loss_contrastive(const std::vector<Eigen::VectorXd>& features,
                        const std::vector<int>& labels, double tau);

/// Commonsense penalty for one predicate:
///   1[t not in S_aligned] * lambda_weak + 1[t in S_violated] * lambda_strong.
double loss_distill(const Triplet& t, const AlignmentSets& sets, double lambda_weak = 0.1,
                    double lambda_strong = 10.0);

struct LossBreakdown {
  double total = 0.0;
  double super_mean = 0.0;
  double sub_mean = 0.0;
  double contrastive = 0.0;
};

/// Full forward/backward over a batch:
///   total = w_sup * mean(L_super) + w_sub * mean(L_sub) + w_con * L_con,
/// with the contrastive batch drawn from the non-background samples' features
/// and their relation labels. Gradients are analytic for every parameter the
/// losses touch.
std::pair<LossBreakdown, GradientSet> total_loss_and_grads(
    const std::vector<TrainingSample>& samples, const HeadParameters& p,
    const RelationHierarchy& h, const LossWeights& w);

/// Central finite differences of an arbitrary scalar function of the
/// parameters, entry by entry. Gradient-check oracle; O(#params) evaluations.
GradientSet finite_difference_gradients(
    const std::function<double(const HeadParameters&)>& loss_fn, const HeadParameters& p,
    double epsilon = 1e-4);

/// In-place theta -= lr * g. Throws ShapeMismatch on shape disagreement.
void sgd_step(HeadParameters& p, const GradientSet& g, double lr);

struct ToyConfig {
  int d = 16;
  int num_pairs = 200;
  int num_relations = 6;  // spread round-robin over the 3 categories
  int steps = 2000;
  double lr = 0.1;
  std::uint64_t seed = 7;
  LossWeights weights;
  /// > 0 generates raw pre-projection inputs of size 2*raw_channels instead
  /// of direct features, so the trained checkpoint carries a projection.
  int raw_channels = 0;
};

struct ToyDataset {
  std::vector<TrainingSample> samples;
  RelationHierarchy hierarchy;
  RelationVocabulary vocabulary;
};

/// Separable synthetic pairs: relation r's samples cluster around a scaled
/// basis vector with small Gaussian noise, labels round-robin over relations.
ToyDataset make_toy_dataset(const ToyConfig& cfg);

struct ToyRun {
  HeadParameters params;
  std::vector<double> loss_history;  // one entry per step, pre-update loss
  double final_accuracy = 0.0;
};

/// Full-batch SGD for cfg.steps steps on a fresh seeded head.
ToyRun train_toy(const ToyDataset& data, const ToyConfig& cfg);

/// Fraction of samples whose joint argmax (all relations plus background
/// mass) names the target. Background targets count as correct when the
/// background mass beats every joint entry.
double joint_accuracy(const std::vector<TrainingSample>& samples, const HeadParameters& p,
                      const RelationHierarchy& h);

}  // namespace sgrel
