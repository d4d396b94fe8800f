#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sgrel/geometry.hpp"
#include "sgrel/scene_graph.hpp"
#include "sgrel/vocabulary.hpp"

namespace sgrel {

/// Contextualized image features, channels x height x width, row-major.
/// An optional depth map rides along as one extra channel.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  double at(std::size_t c, std::size_t r, std::size_t col) const {
    return data[(c * height + r) * width + col];
  }
  double& at(std::size_t c, std::size_t r, std::size_t col) {
    return data[(c * height + r) * width + col];
  }
};

/// Directed pair feature x for one (subject, object) ordering.
struct PairFeature {
  Eigen::VectorXd x;
  int subject_idx = -1;
  int object_idx = -1;
};

/// Trainable state of the relation head. Weight matrices are stored feature-
/// major (d rows, one column per class), so logits are W^T x + b.
/// w_cat[0..2] are the geometric/possessive/semantic heads; their column
/// counts must match the hierarchy's category sizes. The flat head is the
/// optional baseline over R+1 classes (background last).
struct HeadParameters {
  Eigen::MatrixXd w_proj;  // (2*channels) x d
  Eigen::VectorXd b_proj;  // d
  Eigen::MatrixXd w_sc;    // d x 4
  Eigen::VectorXd b_sc;    // 4
  std::array<Eigen::MatrixXd, 3> w_cat;
  std::array<Eigen::VectorXd, 3> b_cat;
  std::optional<Eigen::MatrixXd> w_flat;  // d x (R+1)
  std::optional<Eigen::VectorXd> b_flat;

  int feature_dim() const { return static_cast<int>(w_sc.rows()); }
  std::array<int, 3> category_sizes() const {
    return {static_cast<int>(w_cat[0].cols()), static_cast<int>(w_cat[1].cols()),
            static_cast<int>(w_cat[2].cols())};
  }
};

/// Seeded uniform initialization in [-1/sqrt(d), 1/sqrt(d)]. proj_rows = 0
/// omits the projection (identity-free heads on direct features); flat_classes
/// = 0 omits the flat head.
HeadParameters make_head_parameters(int proj_rows, int d, const std::array<int, 3>& category_sizes,
                                    int flat_classes, std::uint64_t seed);

/// Super-category distribution plus per-category joint probabilities for one
/// directed pair. r_sc = (geo, pos, sem, background); joint[c][k] is the joint
/// probability of the k-th relation in category c's order list, and sums to
/// r_sc[c] over k. Total mass sums to 1.
struct ComposedDistribution {
  Eigen::Vector4d r_sc;
  std::array<Eigen::VectorXd, 3> joint;

  double total_mass() const {
    double m = r_sc(3);
    for (const auto& j : joint) m += j.sum();
    return m;
  }
};

/// Numerically-stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Masks the feature map by each box (cell-center containment, boxes clamped
/// to the map), mean-pools each masked map over all spatial positions,
/// concatenates the two pooled vectors in both orders and projects by w_proj.
/// Returns the (i,j)-directed feature first, then (j,i).
std::pair<PairFeature, PairFeature> build_pair_features(const FeatureMap& fm,
                                                        const BoundingBox& box_i,
                                                        const BoundingBox& box_j,
                                                        const HeadParameters& p,
                                                        int node_i = -1, int node_j = -1);

/// Baseline flat head: softmax over R+1 classes (background last).
Eigen::VectorXd flat_forward(const PairFeature& x, const HeadParameters& p);

/// Hierarchical head: r_sc = softmax(x^T w_sc + b_sc); per category c,
/// joint[c] = softmax(x^T w_cat[c] + b_cat[c]) * r_sc[c].
ComposedDistribution hierarchical_forward(const PairFeature& x, const HeadParameters& p,
                                          const RelationHierarchy& h);

/// One candidate per super-category: argmax relation within each category,
/// ties broken toward the lower relation index. Background yields none.
std::vector<PredicateCandidate> edge_candidates(const ComposedDistribution& cd, int subject_idx,
                                                int object_idx, const RelationHierarchy& h);

/// Sort by confidence descending with deterministic tie-break (subject_idx,
/// object_idx, relation ascending), truncated to k. k = 0 keeps everything.
std::vector<PredicateCandidate> rank_graph(std::vector<PredicateCandidate> candidates,
                                           std::size_t k);

/// Checkpoint: one SGT1 tensor file per matrix plus manifest.json naming each.
/// `metadata` is embedded verbatim in the manifest (pass "{}" for none).
void save_checkpoint(const std::filesystem::path& dir, const HeadParameters& p,
                     const std::string& metadata_json = "{}");
HeadParameters load_checkpoint(const std::filesystem::path& dir);

}  // namespace sgrel
