#include <cmath>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/relation_head.hpp"

using sgrel::BoundingBox;
using sgrel::ComposedDistribution;
using sgrel::FeatureMap;
using sgrel::HeadParameters;
using sgrel::PairFeature;
using sgrel::RelationHierarchy;
using testsupport::Rng;
using testsupport::TempDir;

namespace {

RelationHierarchy hierarchy_2_2_2() {
  return RelationHierarchy::from_assignment({"geometric", "possessive", "semantic"},
                                            {0, 1, 2, 0, 1, 2});
}

Eigen::VectorXd random_vec(Rng& rng, int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

// Plain-definition softmax; safe for the small logits used here.
Eigen::VectorXd naive_softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    e(i) = std::exp(logits(i));
    sum += e(i);
  }
  return e / sum;
}

// Logits recomputed entry by entry, avoiding the library's matrix path.
Eigen::VectorXd naive_logits(const Eigen::VectorXd& x, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b) {
  Eigen::VectorXd out(w.cols());
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    double acc = b(k);
    for (Eigen::Index i = 0; i < w.rows(); ++i) acc += x(i) * w(i, k);
    out(k) = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("softmax matches the plain definition and is shift-stable") {
  Rng rng(201);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd logits = random_vec(rng, 2 + rng.below(6), 5.0);
    const Eigen::VectorXd s = sgrel::softmax(logits);
    const Eigen::VectorXd expect = naive_softmax(logits);
    CHECK(std::abs(s.sum() - 1.0) < 1e-12);
    CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-12);
    // Invariance under a constant shift.
    const Eigen::VectorXd shifted = sgrel::softmax(logits.array() + 300.0);
    CHECK((s - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
  // No overflow for extreme logits.
  Eigen::VectorXd big(3);
  big << 1000.0, 999.0, -1000.0;
  const Eigen::VectorXd s = sgrel::softmax(big);
  CHECK(std::isfinite(s.sum()));
  CHECK(s(0) > s(1));
}

TEST_CASE("parameter initialization is seeded and bounded") {
  const std::array<int, 3> sizes = {2, 3, 4};
  const HeadParameters a = sgrel::make_head_parameters(6, 5, sizes, 10, 42);
  const HeadParameters b = sgrel::make_head_parameters(6, 5, sizes, 10, 42);
  const HeadParameters c = sgrel::make_head_parameters(6, 5, sizes, 10, 43);
  CHECK((a.w_sc - b.w_sc).norm() == 0.0);
  CHECK((a.w_proj - b.w_proj).norm() == 0.0);
  CHECK((a.w_sc - c.w_sc).norm() != 0.0);
  CHECK(a.w_proj.rows() == 6);
  CHECK(a.w_proj.cols() == 5);
  CHECK(a.w_sc.rows() == 5);
  CHECK(a.w_sc.cols() == 4);
  CHECK(a.w_cat[2].cols() == 4);
  CHECK(a.w_flat->cols() == 10);
  CHECK(a.b_sc.isZero());
  const double bound = 1.0 / std::sqrt(5.0);
  CHECK(a.w_sc.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.w_proj.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
  CHECK(a.category_sizes() == sizes);
  CHECK(a.feature_dim() == 5);
}

TEST_CASE("hierarchical forward composes per-category softmaxes") {
  Rng rng(202);
  const RelationHierarchy h = hierarchy_2_2_2();
  const HeadParameters p = sgrel::make_head_parameters(0, 7, {2, 2, 2}, 0, 11);
  for (int i = 0; i < 200; ++i) {
    const PairFeature x{random_vec(rng, 7, 3.0), 0, 1};
    const ComposedDistribution cd = sgrel::hierarchical_forward(x, p, h);

    const Eigen::VectorXd r_sc = naive_softmax(naive_logits(x.x, p.w_sc, p.b_sc));
    CHECK((cd.r_sc - r_sc).cwiseAbs().maxCoeff() < 1e-12);
    for (std::size_t c = 0; c < 3; ++c) {
      const Eigen::VectorXd within =
          naive_softmax(naive_logits(x.x, p.w_cat[c], p.b_cat[c]));
      const Eigen::VectorXd joint = within * r_sc(static_cast<Eigen::Index>(c));
      CHECK((cd.joint[c] - joint).cwiseAbs().maxCoeff() < 1e-12);
      // Each category's joint block carries exactly its super-category mass.
      CHECK(std::abs(cd.joint[c].sum() - cd.r_sc(static_cast<Eigen::Index>(c))) < 1e-12);
    }
    CHECK(std::abs(cd.total_mass() - 1.0) < 1e-12);
  }
}

TEST_CASE("hierarchical forward rejects bad shapes") {
  const HeadParameters p = sgrel::make_head_parameters(0, 7, {2, 2, 2}, 0, 11);
  const RelationHierarchy h = hierarchy_2_2_2();
  const sgrel::PairFeature short_x{Eigen::VectorXd::Zero(6), 0, 1};
  CHECK_THROWS_AS(sgrel::hierarchical_forward(short_x, p, h), sgrel::DimensionMismatch);
  const RelationHierarchy two = RelationHierarchy::from_assignment({"a", "b"}, {0, 1, 0, 1});
  const sgrel::PairFeature ok_x{Eigen::VectorXd::Zero(7), 0, 1};
  CHECK_THROWS_AS(sgrel::hierarchical_forward(ok_x, p, two), sgrel::DimensionMismatch);
}

TEST_CASE("flat forward is a softmax over R+1 classes") {
  Rng rng(203);
  const HeadParameters p = sgrel::make_head_parameters(0, 5, {2, 2, 2}, 7, 3);
  const PairFeature x{random_vec(rng, 5, 2.0), 0, 1};
  const Eigen::VectorXd probs = sgrel::flat_forward(x, p);
  REQUIRE(probs.size() == 7);
  CHECK(std::abs(probs.sum() - 1.0) < 1e-12);
  const Eigen::VectorXd expect = naive_softmax(naive_logits(x.x, *p.w_flat, *p.b_flat));
  CHECK((probs - expect).cwiseAbs().maxCoeff() < 1e-12);

  const HeadParameters bare = sgrel::make_head_parameters(0, 5, {2, 2, 2}, 0, 3);
  CHECK_THROWS_AS(sgrel::flat_forward(x, bare), sgrel::MissingFlatHead);
}

TEST_CASE("pooled pair features match per-cell recomputation") {
  Rng rng(204);
  FeatureMap fm;
  fm.channels = 3;
  fm.height = 5;
  fm.width = 6;
  fm.data.resize(fm.channels * fm.height * fm.width);
  for (double& v : fm.data) v = rng.uniform(-2, 2);

  const HeadParameters p = sgrel::make_head_parameters(6, 4, {2, 2, 2}, 0, 9);
  const BoundingBox bi{1.2, 0.4, 2.5, 3.0};
  const BoundingBox bj{-3.0, 2.0, 20.0, 20.0};  // clamps to the whole map
  const auto [ij, ji] = sgrel::build_pair_features(fm, bi, bj, p, 4, 7);
  CHECK(ij.subject_idx == 4);
  CHECK(ij.object_idx == 7);
  CHECK(ji.subject_idx == 7);
  CHECK(ji.object_idx == 4);

  auto pooled = [&](const BoundingBox& b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
    int count = 0;
    const double x1 = std::max(b.x, 0.0), y1 = std::max(b.y, 0.0);
    const double x2 = std::min(b.x2(), 6.0), y2 = std::min(b.y2(), 5.0);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 6; ++c) {
        const double cx = c + 0.5, cy = r + 0.5;
        if (cx < x1 || cx > x2 || cy < y1 || cy > y2) continue;
        for (std::size_t ch = 0; ch < 3; ++ch)
          acc(static_cast<Eigen::Index>(ch)) += fm.at(ch, r, c);
        ++count;
      }
    return count ? Eigen::VectorXd(acc / count) : acc;
  };
  Eigen::VectorXd cat(6);
  cat << pooled(bi), pooled(bj);
  const Eigen::VectorXd expect = p.w_proj.transpose() * cat + p.b_proj;
  CHECK((ij.x - expect).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::VectorXd cat_rev(6);
  cat_rev << pooled(bj), pooled(bi);
  const Eigen::VectorXd expect_rev = p.w_proj.transpose() * cat_rev + p.b_proj;
  CHECK((ji.x - expect_rev).cwiseAbs().maxCoeff() < 1e-12);

  // A box that covers no cell centers pools to zero.
  const auto [outside, other] =
      sgrel::build_pair_features(fm, {0.6, 0.6, 0.2, 0.2}, bi, p, 0, 1);
  (void)other;
  Eigen::VectorXd cat_zero(6);
  cat_zero << Eigen::VectorXd::Zero(3), pooled(bi);
  const Eigen::VectorXd expect_zero = p.w_proj.transpose() * cat_zero + p.b_proj;
  CHECK((outside.x - expect_zero).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("edge candidates take each category argmax") {
  Rng rng(205);
  const RelationHierarchy h =
      RelationHierarchy::from_assignment({"g", "p", "s"}, {0, 1, 2, 0, 1, 2, 0, 1, 2});
  const HeadParameters p = sgrel::make_head_parameters(0, 6, {3, 3, 3}, 0, 17);
  for (int trial = 0; trial < 100; ++trial) {
    const PairFeature x{random_vec(rng, 6, 4.0), 2, 5};
    const ComposedDistribution cd = sgrel::hierarchical_forward(x, p, h);
    const auto cands = sgrel::edge_candidates(cd, 2, 5, h);
    REQUIRE(cands.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      // Naive argmax with ties toward the lower relation index.
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < cd.joint[c].size(); ++k)
        if (cd.joint[c](k) > cd.joint[c](best)) best = k;
      CHECK(cands[c].relation == h.within_category_order[c][static_cast<std::size_t>(best)]);
      CHECK(cands[c].super_category == static_cast<int>(c));
      CHECK(cands[c].confidence == doctest::Approx(cd.joint[c](best)).epsilon(1e-12));
      CHECK(cands[c].subject_idx == 2);
      CHECK(cands[c].object_idx == 5);
    }
  }
}

TEST_CASE("rank_graph orders deterministically and truncates") {
  std::vector<sgrel::PredicateCandidate> cands = {
      {0, 1, 4, 1, 0.5}, {2, 0, 1, 0, 0.9}, {0, 1, 2, 2, 0.5}, {1, 2, 3, 0, 0.5},
  };
  const auto ranked = sgrel::rank_graph(cands, 0);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].confidence == 0.9);
  // The three tied candidates sort by subject, then object, then relation.
  CHECK(ranked[1].relation == 2);
  CHECK(ranked[2].relation == 4);
  CHECK(ranked[3].relation == 3);
  const auto top2 = sgrel::rank_graph(cands, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[1].relation == 2);
}

TEST_CASE("checkpoint round-trip") {
  TempDir tmp("ckpt");
  const HeadParameters p = sgrel::make_head_parameters(8, 5, {2, 3, 4}, 10, 77);
  sgrel::save_checkpoint(tmp.file("a"), p, "{\"note\":1}");
  const HeadParameters back = sgrel::load_checkpoint(tmp.file("a"));

  // Values survive the float32 file format within a cast.
  auto close32 = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + a.cwiseAbs().maxCoeff());
  };
  CHECK(close32(back.w_proj, p.w_proj));
  CHECK(close32(back.w_sc, p.w_sc));
  for (std::size_t c = 0; c < 3; ++c) CHECK(close32(back.w_cat[c], p.w_cat[c]));
  REQUIRE(back.w_flat.has_value());
  CHECK(close32(*back.w_flat, *p.w_flat));

  // Save-load-save is a fixpoint: the second generation is byte-identical.
  sgrel::save_checkpoint(tmp.file("b"), back, "{\"note\":1}");
  for (const auto& entry : std::filesystem::directory_iterator(tmp.file("a"))) {
    std::ifstream f1(entry.path(), std::ios::binary);
    std::ifstream f2(tmp.path() / "b" / entry.path().filename(), std::ios::binary);
    REQUIRE(f2.good());
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
  }

  // Projection-free, flat-free heads round-trip too.
  const HeadParameters bare = sgrel::make_head_parameters(0, 4, {1, 2, 2}, 0, 5);
  sgrel::save_checkpoint(tmp.file("c"), bare);
  const HeadParameters bare_back = sgrel::load_checkpoint(tmp.file("c"));
  CHECK(bare_back.w_proj.size() == 0);
  CHECK_FALSE(bare_back.w_flat.has_value());
  CHECK(bare_back.w_sc.rows() == 4);
}
