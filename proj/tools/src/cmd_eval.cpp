#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "commands.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/json_io.hpp"
#include "sgrel/metrics.hpp"

namespace sgrel::cli {

int run_eval(const EvalOptions& opts) {
  const RelationVocabulary vocab = load_vocabulary(opts.vocab);

  EvalMode mode;
  if (opts.mode == "predcls")
    mode = EvalMode::PREDCLS;
  else if (opts.mode == "sgcls")
    mode = EvalMode::SGCLS;
  else if (opts.mode == "sgdet")
    mode = EvalMode::SGDET;
  else
    throw std::invalid_argument("unknown mode '" + opts.mode +
                                "' (expected predcls, sgcls or sgdet)");

  RecallAveraging avg;
  if (opts.recall_averaging == "micro")
    avg = RecallAveraging::MICRO;
  else if (opts.recall_averaging == "per-image")
    avg = RecallAveraging::PER_IMAGE;
  else
    throw std::invalid_argument("--recall-averaging expects micro or per-image");

  const std::vector<SceneGraph> preds = load_scene_graphs(opts.pred, vocab);
  std::vector<GraphPair> pairs;
  std::vector<SceneGraph> gts;        // owns gt graphs when --gt is given
  std::vector<SceneGraph> placeholders;  // empty prediction graphs for unmatched gt
  if (opts.gt.empty()) {
    pairs.reserve(preds.size());
    for (const SceneGraph& g : preds) pairs.push_back({&g, &g});
  } else {
    gts = load_scene_graphs(opts.gt, vocab);
    std::map<std::string, const SceneGraph*> by_id;
    for (const SceneGraph& g : preds) {
      if (!by_id.emplace(g.image_id, &g).second)
        throw FormatError(opts.pred + ": duplicate image_id '" + g.image_id + "'");
    }
    // pairs holds pointers into placeholders, so it must never reallocate.
    placeholders.reserve(gts.size());
    pairs.reserve(gts.size());
    for (const SceneGraph& g : gts) {
      auto it = by_id.find(g.image_id);
      if (it != by_id.end()) {
        pairs.push_back({it->second, &g});
      } else {
        // Unscored image: its ground truth still counts in every denominator.
        SceneGraph empty = g;
        empty.pred_candidates.clear();
        placeholders.push_back(std::move(empty));
        pairs.push_back({&placeholders.back(), &g});
      }
    }
  }

  std::set<Triplet> train;
  const std::set<Triplet>* train_ptr = nullptr;
  if (!opts.train_triplets.empty()) {
    train = load_triplet_set(opts.train_triplets, vocab);
    train_ptr = &train;
  }

  const EvalReport report = evaluate(pairs, opts.ks, mode, train_ptr, avg);
  std::cout << format_report_table(report);

  const nlohmann::json effective = {{"command", "eval"},
                                    {"pred", opts.pred},
                                    {"gt", opts.gt},
                                    {"vocab", opts.vocab},
                                    {"mode", opts.mode},
                                    {"ks", opts.ks},
                                    {"train_triplets", opts.train_triplets},
                                    {"recall_averaging", opts.recall_averaging}};
  nlohmann::json recall = nlohmann::json::object();
  nlohmann::json mean_recall = nlohmann::json::object();
  for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
  for (const auto& [k, v] : report.mean_recall) mean_recall[std::to_string(k)] = v;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [rel, by_k] : report.per_class_recall) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [k, v] : by_k) row[std::to_string(k)] = v;
    per_class[vocab.relation_names.at(static_cast<std::size_t>(rel))] = std::move(row);
  }
  nlohmann::json doc = {{"metadata", nlohmann::json::parse(metadata_json(opts.seed, effective.dump()))},
                        {"images", pairs.size()},
                        {"recall", std::move(recall)},
                        {"mean_recall", std::move(mean_recall)},
                        {"per_class_recall", std::move(per_class)},
                        {"wmap_rel", report.wmap_rel},
                        {"wmap_phr", report.wmap_phr},
                        {"composite", report.composite},
                        {"has_zero_shot", report.has_zero_shot}};
  if (report.has_zero_shot) {
    nlohmann::json zs = nlohmann::json::object();
    for (const auto& [k, v] : report.zero_shot) zs[std::to_string(k)] = v;
    doc["zero_shot"] = std::move(zs);
  }
  std::ofstream out(opts.out);
  if (!out) throw FormatError("cannot open " + opts.out + " for writing");
  out << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace sgrel::cli
