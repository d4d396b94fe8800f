#include <iostream>

#include "commands.hpp"
#include "sgrel/clustering.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/json_io.hpp"

namespace sgrel::cli {

int run_cluster(const ClusterOptions& opts) {
  EmbeddingTable table = load_embeddings(opts.embeddings);
  if (opts.l2_normalize) l2_normalize(table);

  RelationVocabulary vocab;
  if (opts.vocab.empty()) {
    vocab.relation_names = table.names;
  } else {
    vocab = load_vocabulary(opts.vocab);
  }

  const ClusterResult result = kmeans(table, opts.k, opts.seed);
  const RelationHierarchy hierarchy = hierarchy_from_clusters(result, vocab);
  const auto errors = validate_hierarchy(hierarchy, vocab);
  if (!errors.empty()) throw FormatError("clustered hierarchy is invalid: " + errors.front().message);
  save_hierarchy(opts.out, hierarchy, vocab);

  std::vector<std::size_t> sizes(static_cast<std::size_t>(opts.k), 0);
  for (int c : result.assignment) ++sizes[static_cast<std::size_t>(c)];

  const nlohmann::json effective = {{"command", "cluster"},
                                    {"embeddings", opts.embeddings},
                                    {"vocab", opts.vocab},
                                    {"k", opts.k},
                                    {"l2_normalize", opts.l2_normalize}};
  const nlohmann::json stats = {
      {"metadata", nlohmann::json::parse(metadata_json(opts.seed, effective.dump()))},
      {"k", opts.k},
      {"points", table.size()},
      {"inertia", result.inertia},
      {"iterations", result.inertia_history.size()},
      {"cluster_sizes", sizes}};
  std::cout << stats.dump(2) << "\n";
  return kOk;
}

}  // namespace sgrel::cli
