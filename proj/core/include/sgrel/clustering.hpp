#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sgrel/vocabulary.hpp"

namespace sgrel {

/// Token embeddings for relation labels, one row per name. Produced
/// externally; this library never runs an embedding model.
struct EmbeddingTable {
  std::vector<std::string> names;
  Eigen::MatrixXd vectors;  // names.size() x e

  int dimension() const { return static_cast<int>(vectors.cols()); }
  int size() const { return static_cast<int>(names.size()); }
};

/// Scales every row to unit L2 norm; zero rows are left unchanged.
void l2_normalize(EmbeddingTable& table);

struct ClusterResult {
  std::vector<std::string> names;  // copied from the input table
  std::vector<int> assignment;     // names[i] -> cluster id in [0, k)
  Eigen::MatrixXd centroids;       // k x e
  double inertia = 0.0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

/// k-means with k-means++ initialization and Lloyd iterations until the
/// assignment reaches a fixpoint or 300 iterations. Distances are squared
/// Euclidean. Empty clusters are reseeded with the point farthest from its
/// current centroid. Deterministic for a fixed seed. Throws TooFewPoints when
/// k exceeds the number of rows.
ClusterResult kmeans(const EmbeddingTable& table, int k, std::uint64_t seed);

/// Clusters become super-categories named cluster_0..cluster_{k-1};
/// within-category order is ascending relation index. Every vocabulary
/// relation must appear in the cluster result.
RelationHierarchy hierarchy_from_clusters(const ClusterResult& cr, const RelationVocabulary& v);

}  // namespace sgrel
