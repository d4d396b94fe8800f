#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/json_io.hpp"
#include "sgrel/training.hpp"

namespace sgrel::cli {

int run_distill_sets(const DistillSetsOptions& opts) {
  const RelationVocabulary vocab = load_vocabulary(opts.vocab);
  const AlignmentSets sets = load_alignment_sets(opts.sets, vocab);

  SceneGraphReader reader(opts.graphs, vocab);
  nlohmann::json per_graph = nlohmann::json::array();
  std::size_t candidates = 0, in_aligned = 0, unlisted = 0, in_violated = 0;
  double total = 0.0;
  while (auto g = reader.next()) {
    double graph_total = 0.0;
    for (const PredicateCandidate& c : g->pred_candidates) {
      const Triplet t = g->label_triplet(c);
      graph_total += loss_distill(t, sets, opts.lambda_weak, opts.lambda_strong);
      ++candidates;
      if (sets.aligned.count(t))
        ++in_aligned;
      else if (sets.violated.count(t))
        ++in_violated;
      else
        ++unlisted;
    }
    total += graph_total;
    per_graph.push_back({{"image_id", g->image_id},
                         {"candidates", g->pred_candidates.size()},
                         {"penalty", graph_total}});
  }

  const nlohmann::json effective = {{"command", "distill-sets"},
                                    {"sets", opts.sets},
                                    {"graphs", opts.graphs},
                                    {"vocab", opts.vocab},
                                    {"lambda_weak", opts.lambda_weak},
                                    {"lambda_strong", opts.lambda_strong}};
  const nlohmann::json doc = {
      {"metadata", nlohmann::json::parse(metadata_json(opts.seed, effective.dump()))},
      {"candidates", candidates},
      {"aligned", in_aligned},
      {"unlisted", unlisted},
      {"violated", in_violated},
      {"total_penalty", total},
      {"mean_penalty", candidates == 0 ? 0.0 : total / static_cast<double>(candidates)},
      {"per_graph", per_graph}};
  std::ofstream out(opts.out);
  if (!out) throw FormatError("cannot open " + opts.out + " for writing");
  out << doc.dump(2) << "\n";
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

}  // namespace sgrel::cli
