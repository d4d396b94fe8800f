#include "sgrel/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <tuple>

#include "sgrel/errors.hpp"

namespace sgrel {
namespace {

constexpr double kProbFloor = 1e-12;

double clamped_nll(double prob) { return -std::log(std::max(prob, kProbFloor)); }

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; u1 nudged off 0 so the log is finite.
double gaussian(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Loss plus (optionally) per-feature gradients. Anchors with positives but no
// negatives contribute 0 yet still count toward the anchor average.
double contrastive_with_grads(const std::vector<Eigen::VectorXd>& xs,
                              const std::vector<int>& labels, double tau,
                              std::vector<Eigen::VectorXd>* grads) {
  const std::size_t n = xs.size();
  if (grads) grads->assign(n, Eigen::VectorXd());
  if (n < 2) return 0.0;
  const Eigen::Index d = xs[0].size();
  if (grads)
    for (auto& g : *grads) g = Eigen::VectorXd::Zero(d);

  double loss_acc = 0.0;
  std::size_t anchors_with_p = 0;
  std::vector<std::size_t> pos, neg;
  std::vector<double> z(n);

  for (std::size_t a = 0; a < n; ++a) {
    pos.clear();
    neg.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      (labels[j] == labels[a] ? pos : neg).push_back(j);
    }
    if (pos.empty()) continue;
    ++anchors_with_p;
    if (neg.empty()) continue;

    for (std::size_t j = 0; j < n; ++j) z[j] = xs[a].dot(xs[j]) / tau;
    double zmax = z[neg[0]];
    for (std::size_t j : neg) zmax = std::max(zmax, z[j]);
    double sum_exp = 0.0;
    for (std::size_t j : neg) sum_exp += std::exp(z[j] - zmax);
    const double lse = zmax + std::log(sum_exp);

    const double inner = 1.0 / static_cast<double>(pos.size());
    double anchor_sum = 0.0;
    for (std::size_t j : pos) anchor_sum += -z[j] + lse;
    loss_acc += inner * anchor_sum;

    if (grads) {
      for (std::size_t j : pos) {
        (*grads)[a] -= inner / tau * xs[j];
        (*grads)[j] -= inner / tau * xs[a];
      }
      // The log-sum-exp term repeats once per positive; the inner scale and
      // the repeat count cancel.
      for (std::size_t j : neg) {
        const double s = std::exp(z[j] - lse);
        (*grads)[a] += s / tau * xs[j];
        (*grads)[j] += s / tau * xs[a];
      }
    }
  }

  if (anchors_with_p == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(anchors_with_p);
  if (grads)
    for (auto& g : *grads) g *= scale;
  return loss_acc * scale;
}

struct ParamView {
  double* param;
  double* grad;
  Eigen::Index count;
};

// Parallel walk over every parameter entry and its gradient slot.
std::vector<ParamView> parameter_views(HeadParameters& p, GradientSet& g) {
  std::vector<ParamView> views;
  auto add = [&](auto& m, auto& gm) {
    if (m.size() > 0) views.push_back({m.data(), gm.data(), m.size()});
  };
  add(p.w_proj, g.w_proj);
  add(p.b_proj, g.b_proj);
  add(p.w_sc, g.w_sc);
  add(p.b_sc, g.b_sc);
  for (std::size_t c = 0; c < 3; ++c) {
    add(p.w_cat[c], g.w_cat[c]);
    add(p.b_cat[c], g.b_cat[c]);
  }
  if (p.w_flat && g.w_flat) add(*p.w_flat, *g.w_flat);
  if (p.b_flat && g.b_flat) add(*p.b_flat, *g.b_flat);
  return views;
}

}  // namespace

GradientSet GradientSet::zeros_like(const HeadParameters& p) {
  GradientSet g;
  g.w_proj = Eigen::MatrixXd::Zero(p.w_proj.rows(), p.w_proj.cols());
  g.b_proj = Eigen::VectorXd::Zero(p.b_proj.size());
  g.w_sc = Eigen::MatrixXd::Zero(p.w_sc.rows(), p.w_sc.cols());
  g.b_sc = Eigen::VectorXd::Zero(p.b_sc.size());
  for (std::size_t c = 0; c < 3; ++c) {
    g.w_cat[c] = Eigen::MatrixXd::Zero(p.w_cat[c].rows(), p.w_cat[c].cols());
    g.b_cat[c] = Eigen::VectorXd::Zero(p.b_cat[c].size());
  }
  if (p.w_flat) g.w_flat = Eigen::MatrixXd::Zero(p.w_flat->rows(), p.w_flat->cols());
  if (p.b_flat) g.b_flat = Eigen::VectorXd::Zero(p.b_flat->size());
  return g;
}

double loss_super(const ComposedDistribution& cd, int target_sc) {
  if (target_sc < 0 || target_sc > 3) throw std::out_of_range("target super-category out of range");
  return clamped_nll(cd.r_sc(target_sc));
}

double loss_sub(const ComposedDistribution& cd, int target_sc, int target_rel,
                const RelationHierarchy& h) {
  if (target_sc < 0 || target_sc > 3) throw std::out_of_range("target super-category out of range");
  if (target_sc == 3) return 0.0;
  if (target_rel < 0 || target_rel >= static_cast<int>(h.assignment.size()) ||
      h.assignment[static_cast<std::size_t>(target_rel)] != target_sc)
    throw TargetCategoryMismatch("relation " + std::to_string(target_rel) +
                                 " is not in super-category " + std::to_string(target_sc));
  const int pos = h.position_in_category(target_rel);
  return clamped_nll(cd.joint[static_cast<std::size_t>(target_sc)](pos));
}

double loss_contrastive(const std::vector<Eigen::VectorXd>& features,
                        const std::vector<int>& labels, double tau) {
  if (features.size() != labels.size())
    throw std::invalid_argument("features/labels size mismatch");
  if (tau <= 0.0) throw std::invalid_argument("temperature must be positive");
  return contrastive_with_grads(features, labels, tau, nullptr);
}

double loss_distill(const Triplet& t, const AlignmentSets& sets, double lambda_weak,
                    double lambda_strong) {
  double penalty = 0.0;
  if (!sets.aligned.contains(t)) penalty += lambda_weak;
  if (sets.violated.contains(t)) penalty += lambda_strong;
  return penalty;
}

std::pair<LossBreakdown, GradientSet> total_loss_and_grads(
    const std::vector<TrainingSample>& samples, const HeadParameters& p,
    const RelationHierarchy& h, const LossWeights& w) {
  if (samples.empty()) throw std::invalid_argument("empty training batch");
  if (h.num_categories() != 3)
    throw DimensionMismatch("hierarchical losses require exactly 3 super-categories");

  const std::size_t n = samples.size();
  const Eigen::Index d = p.w_sc.rows();
  GradientSet g = GradientSet::zeros_like(p);
  LossBreakdown out;

  std::vector<Eigen::VectorXd> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TrainingSample& s = samples[i];
    if (s.raw.size() > 0) {
      if (p.w_proj.rows() != s.raw.size())
        throw DimensionMismatch("raw input size does not match projection rows");
      feats[i] = p.w_proj.transpose() * s.raw + p.b_proj;
    } else {
      feats[i] = s.x;
    }
    if (feats[i].size() != d) throw DimensionMismatch("pair feature size does not match head");
  }

  std::vector<Eigen::VectorXd> dfeat(n, Eigen::VectorXd::Zero(d));
  const double per_sample = 1.0 / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const TrainingSample& s = samples[i];
    if (s.target_sc < 0 || s.target_sc > 3)
      throw std::out_of_range("target super-category out of range");
    const Eigen::VectorXd& f = feats[i];
    const Eigen::VectorXd p_sc = softmax(p.w_sc.transpose() * f + p.b_sc);

    out.super_mean += clamped_nll(p_sc(s.target_sc)) * per_sample;
    {
      Eigen::VectorXd dlogits = p_sc;
      dlogits(s.target_sc) -= 1.0;
      const double scale = w.w_sup * per_sample;
      g.w_sc.noalias() += scale * f * dlogits.transpose();
      g.b_sc += scale * dlogits;
      dfeat[i].noalias() += scale * (p.w_sc * dlogits);
    }

    if (s.target_sc < 3) {
      const auto c = static_cast<std::size_t>(s.target_sc);
      if (s.target_rel < 0 || s.target_rel >= static_cast<int>(h.assignment.size()) ||
          h.assignment[static_cast<std::size_t>(s.target_rel)] != s.target_sc)
        throw TargetCategoryMismatch("relation " + std::to_string(s.target_rel) +
                                     " is not in super-category " + std::to_string(s.target_sc));
      const int pos = h.position_in_category(s.target_rel);
      const Eigen::VectorXd p_within = softmax(p.w_cat[c].transpose() * f + p.b_cat[c]);
      out.sub_mean += clamped_nll(p_within(pos) * p_sc(s.target_sc)) * per_sample;

      const double scale = w.w_sub * per_sample;
      Eigen::VectorXd dlogits_cat = p_within;
      dlogits_cat(pos) -= 1.0;
      g.w_cat[c].noalias() += scale * f * dlogits_cat.transpose();
      g.b_cat[c] += scale * dlogits_cat;
      dfeat[i].noalias() += scale * (p.w_cat[c] * dlogits_cat);

      // The joint factorizes, so the target's super-category probability
      // takes a second cross-entropy hit here.
      Eigen::VectorXd dlogits_sc = p_sc;
      dlogits_sc(s.target_sc) -= 1.0;
      g.w_sc.noalias() += scale * f * dlogits_sc.transpose();
      g.b_sc += scale * dlogits_sc;
      dfeat[i].noalias() += scale * (p.w_sc * dlogits_sc);
    }
  }

  std::vector<std::size_t> con_index;
  std::vector<Eigen::VectorXd> con_feats;
  std::vector<int> con_labels;
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].target_sc == 3) continue;
    con_index.push_back(i);
    con_feats.push_back(feats[i]);
    con_labels.push_back(samples[i].target_rel);
  }
  std::vector<Eigen::VectorXd> con_grads;
  out.contrastive = contrastive_with_grads(con_feats, con_labels, w.temperature, &con_grads);
  for (std::size_t j = 0; j < con_index.size(); ++j)
    dfeat[con_index[j]] += w.w_con * con_grads[j];

  for (std::size_t i = 0; i < n; ++i) {
    const TrainingSample& s = samples[i];
    if (s.raw.size() > 0) {
      g.w_proj.noalias() += s.raw * dfeat[i].transpose();
      g.b_proj += dfeat[i];
    }
  }

  out.total = w.w_sup * out.super_mean + w.w_sub * out.sub_mean + w.w_con * out.contrastive;
  return {out, g};
}

GradientSet finite_difference_gradients(
    const std::function<double(const HeadParameters&)>& loss_fn, const HeadParameters& p,
    double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  HeadParameters work = p;
  GradientSet g = GradientSet::zeros_like(p);
  for (const ParamView& v : parameter_views(work, g)) {
    for (Eigen::Index k = 0; k < v.count; ++k) {
      const double orig = v.param[k];
      v.param[k] = orig + epsilon;
      const double up = loss_fn(work);
      v.param[k] = orig - epsilon;
      const double down = loss_fn(work);
      v.param[k] = orig;
      v.grad[k] = (up - down) / (2.0 * epsilon);
    }
  }
  return g;
}

void sgd_step(HeadParameters& p, const GradientSet& g, double lr) {
  auto check = [](const auto& a, const auto& b, const char* name) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeMismatch(std::string("gradient shape mismatch for ") + name);
  };
  check(p.w_proj, g.w_proj, "w_proj");
  check(p.b_proj, g.b_proj, "b_proj");
  check(p.w_sc, g.w_sc, "w_sc");
  check(p.b_sc, g.b_sc, "b_sc");
  for (std::size_t c = 0; c < 3; ++c) {
    check(p.w_cat[c], g.w_cat[c], "w_cat");
    check(p.b_cat[c], g.b_cat[c], "b_cat");
  }
  if (g.w_flat) {
    if (!p.w_flat) throw ShapeMismatch("gradient carries a flat head the parameters lack");
    check(*p.w_flat, *g.w_flat, "w_flat");
    check(*p.b_flat, *g.b_flat, "b_flat");
  }

  p.w_proj -= lr * g.w_proj;
  p.b_proj -= lr * g.b_proj;
  p.w_sc -= lr * g.w_sc;
  p.b_sc -= lr * g.b_sc;
  for (std::size_t c = 0; c < 3; ++c) {
    p.w_cat[c] -= lr * g.w_cat[c];
    p.b_cat[c] -= lr * g.b_cat[c];
  }
  if (g.w_flat && p.w_flat) {
    *p.w_flat -= lr * *g.w_flat;
    *p.b_flat -= lr * *g.b_flat;
  }
}

ToyDataset make_toy_dataset(const ToyConfig& cfg) {
  const int input_dim = cfg.raw_channels > 0 ? 2 * cfg.raw_channels : cfg.d;
  if (cfg.num_relations < 3 || cfg.num_relations > input_dim)
    throw std::invalid_argument("toy dataset needs 3 <= num_relations <= input dimension");
  ToyDataset data;
  for (int r = 0; r < cfg.num_relations; ++r)
    data.vocabulary.relation_names.push_back("rel_" + std::to_string(r));
  // Object names are not used in training but keep the saved vocabulary
  // usable with scene-graph files.
  for (int i = 0; i < 8; ++i) data.vocabulary.object_names.push_back("obj_" + std::to_string(i));
  std::vector<int> assignment(static_cast<std::size_t>(cfg.num_relations));
  for (int r = 0; r < cfg.num_relations; ++r) assignment[static_cast<std::size_t>(r)] = r % 3;
  data.hierarchy = RelationHierarchy::from_assignment({"geometric", "possessive", "semantic"},
                                                      std::move(assignment));

  std::mt19937_64 rng(cfg.seed);
  data.samples.reserve(static_cast<std::size_t>(cfg.num_pairs));
  for (int i = 0; i < cfg.num_pairs; ++i) {
    const int rel = i % cfg.num_relations;
    TrainingSample s;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(input_dim);
    v(rel) = 4.0;
    for (int j = 0; j < input_dim; ++j) v(j) += 0.1 * gaussian(rng);
    (cfg.raw_channels > 0 ? s.raw : s.x) = std::move(v);
    s.target_sc = rel % 3;
    s.target_rel = rel;
    data.samples.push_back(std::move(s));
  }
  return data;
}

ToyRun train_toy(const ToyDataset& data, const ToyConfig& cfg) {
  std::array<int, 3> cat_sizes = {data.hierarchy.category_size(0), data.hierarchy.category_size(1),
                                  data.hierarchy.category_size(2)};
  ToyRun run;
  const int proj_rows = cfg.raw_channels > 0 ? 2 * cfg.raw_channels : 0;
  run.params = make_head_parameters(proj_rows, cfg.d, cat_sizes, 0, cfg.seed);
  run.loss_history.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    auto [loss, grads] = total_loss_and_grads(data.samples, run.params, data.hierarchy, cfg.weights);
    run.loss_history.push_back(loss.total);
    sgd_step(run.params, grads, cfg.lr);
  }
  run.final_accuracy = joint_accuracy(data.samples, run.params, data.hierarchy);
  return run;
}

double joint_accuracy(const std::vector<TrainingSample>& samples, const HeadParameters& p,
                      const RelationHierarchy& h) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const TrainingSample& s : samples) {
    Eigen::VectorXd f =
        s.raw.size() > 0 ? Eigen::VectorXd(p.w_proj.transpose() * s.raw + p.b_proj) : s.x;
    const ComposedDistribution cd = hierarchical_forward({f, -1, -1}, p, h);
    double best = cd.r_sc(3);
    int best_rel = -1;  // background
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& order = h.within_category_order[c];
      for (Eigen::Index k = 0; k < cd.joint[c].size(); ++k) {
        if (cd.joint[c](k) > best) {
          best = cd.joint[c](k);
          best_rel = order[static_cast<std::size_t>(k)];
        }
      }
    }
    const bool ok = s.target_sc == 3 ? best_rel == -1 : best_rel == s.target_rel;
    if (ok) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace sgrel
