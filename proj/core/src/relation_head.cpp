#include "sgrel/relation_head.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "nlohmann/json.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/tensor.hpp"

namespace sgrel {
namespace {

// Uniform double in [0, 1) built directly from the top 53 bits of the engine
// output. std::uniform_real_distribution is not portable across standard
// library implementations; checkpointed runs must reproduce bit-for-bit.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

// Mean-pools the cells whose centers fall inside the box, clamped to the map.
// An empty intersection yields the zero vector.
Eigen::VectorXd pooled_box_feature(const FeatureMap& fm, const BoundingBox& box) {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fm.channels));
  const double x1 = std::max(box.x, 0.0);
  const double y1 = std::max(box.y, 0.0);
  const double x2 = std::min(box.x2(), static_cast<double>(fm.width));
  const double y2 = std::min(box.y2(), static_cast<double>(fm.height));
  std::size_t count = 0;
  for (std::size_t r = 0; r < fm.height; ++r) {
    const double cy = static_cast<double>(r) + 0.5;
    if (cy < y1 || cy > y2) continue;
    for (std::size_t c = 0; c < fm.width; ++c) {
      const double cx = static_cast<double>(c) + 0.5;
      if (cx < x1 || cx > x2) continue;
      for (std::size_t ch = 0; ch < fm.channels; ++ch)
        pooled(static_cast<Eigen::Index>(ch)) += fm.at(ch, r, c);
      ++count;
    }
  }
  if (count > 0) pooled /= static_cast<double>(count);
  return pooled;
}

void write_matrix(const std::filesystem::path& dir, const std::string& name,
                  const Eigen::MatrixXd& m) {
  write_tensor(dir / (name + ".sgt"), matrix_to_tensor(m));
}

void write_vector(const std::filesystem::path& dir, const std::string& name,
                  const Eigen::VectorXd& v) {
  write_tensor(dir / (name + ".sgt"), vector_to_tensor(v));
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& dir, const std::string& name) {
  return tensor_to_matrix(read_tensor(dir / (name + ".sgt")));
}

Eigen::VectorXd read_vector(const std::filesystem::path& dir, const std::string& name) {
  return tensor_to_vector(read_tensor(dir / (name + ".sgt")));
}

}  // namespace

HeadParameters make_head_parameters(int proj_rows, int d, const std::array<int, 3>& category_sizes,
                                    int flat_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  HeadParameters p;
  if (proj_rows > 0) {
    p.w_proj = uniform_matrix(proj_rows, d, 1.0 / std::sqrt(static_cast<double>(proj_rows)), rng);
    p.b_proj = Eigen::VectorXd::Zero(d);
  }
  p.w_sc = uniform_matrix(d, 4, bound, rng);
  p.b_sc = Eigen::VectorXd::Zero(4);
  for (int c = 0; c < 3; ++c) {
    p.w_cat[static_cast<std::size_t>(c)] = uniform_matrix(d, category_sizes[static_cast<std::size_t>(c)], bound, rng);
    p.b_cat[static_cast<std::size_t>(c)] = Eigen::VectorXd::Zero(category_sizes[static_cast<std::size_t>(c)]);
  }
  if (flat_classes > 0) {
    p.w_flat = uniform_matrix(d, flat_classes, bound, rng);
    p.b_flat = Eigen::VectorXd::Zero(flat_classes);
  }
  return p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

std::pair<PairFeature, PairFeature> build_pair_features(const FeatureMap& fm,
                                                        const BoundingBox& box_i,
                                                        const BoundingBox& box_j,
                                                        const HeadParameters& p,
                                                        int node_i, int node_j) {
  if (fm.data.size() != fm.channels * fm.height * fm.width)
    throw ShapeMismatch("feature map data size does not match channels*height*width");
  if (p.w_proj.rows() != static_cast<Eigen::Index>(2 * fm.channels))
    throw DimensionMismatch("projection expects " + std::to_string(p.w_proj.rows()) +
                            " inputs, pair feature has " + std::to_string(2 * fm.channels));

  const Eigen::VectorXd fi = pooled_box_feature(fm, box_i);
  const Eigen::VectorXd fj = pooled_box_feature(fm, box_j);

  Eigen::VectorXd cat_ij(fi.size() + fj.size());
  cat_ij << fi, fj;
  Eigen::VectorXd cat_ji(fi.size() + fj.size());
  cat_ji << fj, fi;

  PairFeature ij{p.w_proj.transpose() * cat_ij + p.b_proj, node_i, node_j};
  PairFeature ji{p.w_proj.transpose() * cat_ji + p.b_proj, node_j, node_i};
  return {std::move(ij), std::move(ji)};
}

Eigen::VectorXd flat_forward(const PairFeature& x, const HeadParameters& p) {
  if (!p.w_flat || !p.b_flat) throw MissingFlatHead("flat head weights are not present");
  if (p.w_flat->rows() != x.x.size())
    throw DimensionMismatch("flat head expects dim " + std::to_string(p.w_flat->rows()) +
                            ", feature has " + std::to_string(x.x.size()));
  return softmax(p.w_flat->transpose() * x.x + *p.b_flat);
}

ComposedDistribution hierarchical_forward(const PairFeature& x, const HeadParameters& p,
                                          const RelationHierarchy& h) {
  if (h.num_categories() != 3)
    throw DimensionMismatch("hierarchical head requires exactly 3 super-categories, got " +
                            std::to_string(h.num_categories()));
  if (p.w_sc.rows() != x.x.size())
    throw DimensionMismatch("super-category head expects dim " + std::to_string(p.w_sc.rows()) +
                            ", feature has " + std::to_string(x.x.size()));
  for (std::size_t c = 0; c < 3; ++c) {
    if (p.w_cat[c].rows() != x.x.size())
      throw DimensionMismatch("category head " + std::to_string(c) + " expects dim " +
                              std::to_string(p.w_cat[c].rows()) + ", feature has " +
                              std::to_string(x.x.size()));
    if (p.w_cat[c].cols() != static_cast<Eigen::Index>(h.category_size(static_cast<int>(c))))
      throw DimensionMismatch("category head " + std::to_string(c) + " has " +
                              std::to_string(p.w_cat[c].cols()) + " classes, hierarchy has " +
                              std::to_string(h.category_size(static_cast<int>(c))));
  }

  ComposedDistribution cd;
  Eigen::VectorXd sc = softmax(p.w_sc.transpose() * x.x + p.b_sc);
  cd.r_sc = sc;
  for (std::size_t c = 0; c < 3; ++c) {
    Eigen::VectorXd within = softmax(p.w_cat[c].transpose() * x.x + p.b_cat[c]);
    cd.joint[c] = within * sc(static_cast<Eigen::Index>(c));
  }
  return cd;
}

std::vector<PredicateCandidate> edge_candidates(const ComposedDistribution& cd, int subject_idx,
                                                int object_idx, const RelationHierarchy& h) {
  if (h.num_categories() != 3)
    throw DimensionMismatch("hierarchical head requires exactly 3 super-categories, got " +
                            std::to_string(h.num_categories()));
  std::vector<PredicateCandidate> out;
  out.reserve(3);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd& joint = cd.joint[static_cast<std::size_t>(c)];
    const auto& order = h.within_category_order[static_cast<std::size_t>(c)];
    if (joint.size() != static_cast<Eigen::Index>(order.size()))
      throw DimensionMismatch("joint distribution size does not match hierarchy category size");
    int best = 0;
    for (int k = 1; k < joint.size(); ++k)
      if (joint(k) > joint(best)) best = k;
    // Lowest global relation index wins exact ties.
    for (int k = 0; k < joint.size(); ++k)
      if (joint(k) == joint(best) && order[static_cast<std::size_t>(k)] < order[static_cast<std::size_t>(best)])
        best = k;
    out.push_back({subject_idx, object_idx, order[static_cast<std::size_t>(best)], c, joint(best)});
  }
  return out;
}

std::vector<PredicateCandidate> rank_graph(std::vector<PredicateCandidate> candidates,
                                           std::size_t k) {
  std::sort(candidates.begin(), candidates.end(), [](const PredicateCandidate& a,
                                                     const PredicateCandidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.subject_idx != b.subject_idx) return a.subject_idx < b.subject_idx;
    if (a.object_idx != b.object_idx) return a.object_idx < b.object_idx;
    return a.relation < b.relation;
  });
  if (k > 0 && candidates.size() > k) candidates.resize(k);
  return candidates;
}

void save_checkpoint(const std::filesystem::path& dir, const HeadParameters& p,
                     const std::string& metadata_json) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "sgrel-checkpoint-v1";
  manifest["metadata"] = nlohmann::json::parse(metadata_json);

  auto record = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    manifest["tensors"][name] = {{"file", name + ".sgt"}, {"rows", rows}, {"cols", cols}};
  };

  const std::array<std::string, 3> cat_names = {"W_geo", "W_pos", "W_sem"};
  if (p.w_proj.size() > 0) {
    write_matrix(dir, "W_proj", p.w_proj);
    write_vector(dir, "b_proj", p.b_proj);
    record("W_proj", p.w_proj.rows(), p.w_proj.cols());
    record("b_proj", p.b_proj.size(), 1);
  }
  write_matrix(dir, "W_sc", p.w_sc);
  write_vector(dir, "b_sc", p.b_sc);
  record("W_sc", p.w_sc.rows(), p.w_sc.cols());
  record("b_sc", p.b_sc.size(), 1);
  for (std::size_t c = 0; c < 3; ++c) {
    write_matrix(dir, cat_names[c], p.w_cat[c]);
    write_vector(dir, "b_" + cat_names[c].substr(2), p.b_cat[c]);
    record(cat_names[c], p.w_cat[c].rows(), p.w_cat[c].cols());
    record("b_" + cat_names[c].substr(2), p.b_cat[c].size(), 1);
  }
  if (p.w_flat && p.b_flat) {
    write_matrix(dir, "W_flat", *p.w_flat);
    write_vector(dir, "b_flat", *p.b_flat);
    record("W_flat", p.w_flat->rows(), p.w_flat->cols());
    record("b_flat", p.b_flat->size(), 1);
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

HeadParameters load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "sgrel-checkpoint-v1")
    throw FormatError("unrecognized checkpoint format");
  const auto& tensors = manifest.at("tensors");

  HeadParameters p;
  if (tensors.contains("W_proj")) {
    p.w_proj = read_matrix(dir, "W_proj");
    p.b_proj = read_vector(dir, "b_proj");
  }
  p.w_sc = read_matrix(dir, "W_sc");
  p.b_sc = read_vector(dir, "b_sc");
  const std::array<std::string, 3> cat_names = {"W_geo", "W_pos", "W_sem"};
  for (std::size_t c = 0; c < 3; ++c) {
    p.w_cat[c] = read_matrix(dir, cat_names[c]);
    p.b_cat[c] = read_vector(dir, "b_" + cat_names[c].substr(2));
  }
  if (tensors.contains("W_flat")) {
    p.w_flat = read_matrix(dir, "W_flat");
    p.b_flat = read_vector(dir, "b_flat");
  }
  return p;
}

}  // namespace sgrel
