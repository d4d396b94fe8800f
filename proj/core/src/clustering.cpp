#include "sgrel/clustering.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "sgrel/errors.hpp"

namespace sgrel {
namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sq_dist(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
               Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// k-means++: first centroid uniform, the rest proportional to the squared
// distance from the nearest centroid already chosen.
Eigen::MatrixXd seed_centroids(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  const auto first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  centroids.row(0) = points.row(std::min(first, n - 1));

  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = sq_dist(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      // All points coincide with chosen centroids; any pick works.
      chosen = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
      chosen = std::min(chosen, n - 1);
    }
    centroids.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), sq_dist(points, i, centroids, c));
  }
  return centroids;
}

}  // namespace

void l2_normalize(EmbeddingTable& table) {
  for (Eigen::Index i = 0; i < table.vectors.rows(); ++i) {
    const double norm = table.vectors.row(i).norm();
    if (norm > 0.0) table.vectors.row(i) /= norm;
  }
}

ClusterResult kmeans(const EmbeddingTable& table, int k, std::uint64_t seed) {
  const Eigen::Index n = table.vectors.rows();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (static_cast<Eigen::Index>(k) > n)
    throw TooFewPoints("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  if (static_cast<std::size_t>(n) != table.names.size())
    throw DimensionMismatch("embedding table names/vectors size mismatch");

  std::mt19937_64 rng(seed);
  ClusterResult result;
  result.names = table.names;
  result.centroids = seed_centroids(table.vectors, k, rng);
  result.assignment.assign(static_cast<std::size_t>(n), 0);

  constexpr int kMaxIterations = 300;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(table.vectors, i, result.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(table.vectors, i, result.centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      inertia += best_d;
      if (result.assignment[static_cast<std::size_t>(i)] != best) {
        result.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }

    // Reseed each empty cluster with the point farthest from its centroid.
    std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
    for (int a : result.assignment) ++count[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = result.assignment[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(a)] <= 1) continue;  // keep donors non-empty
        const double d = sq_dist(table.vectors, i, result.centroids, a);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      const int old = result.assignment[static_cast<std::size_t>(far)];
      inertia -= far_d;  // the reseeded point now sits on its own centroid
      --count[static_cast<std::size_t>(old)];
      ++count[static_cast<std::size_t>(c)];
      result.assignment[static_cast<std::size_t>(far)] = c;
      result.centroids.row(c) = table.vectors.row(far);
      changed = true;
    }

    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, table.vectors.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      sums.row(result.assignment[static_cast<std::size_t>(i)]) += table.vectors.row(i);
    for (int c = 0; c < k; ++c)
      result.centroids.row(c) = sums.row(c) / static_cast<double>(count[static_cast<std::size_t>(c)]);
  }
  return result;
}

RelationHierarchy hierarchy_from_clusters(const ClusterResult& cr, const RelationVocabulary& v) {
  std::unordered_map<std::string, int> cluster_of;
  int k = 0;
  for (std::size_t i = 0; i < cr.names.size(); ++i) {
    cluster_of[cr.names[i]] = cr.assignment[i];
    k = std::max(k, cr.assignment[i] + 1);
  }
  std::vector<int> assignment;
  assignment.reserve(v.relation_names.size());
  for (const std::string& name : v.relation_names) {
    const auto it = cluster_of.find(name);
    if (it == cluster_of.end())
      throw std::invalid_argument("relation '" + name + "' has no cluster assignment");
    assignment.push_back(it->second);
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) names.push_back("cluster_" + std::to_string(c));
  RelationHierarchy h = RelationHierarchy::from_assignment(std::move(names), std::move(assignment));
  for (int c = 0; c < h.num_categories(); ++c)
    if (h.category_size(c) == 0)
      throw EmptyCategory("cluster " + std::to_string(c) + " holds no vocabulary relation");
  return h;
}

}  // namespace sgrel
