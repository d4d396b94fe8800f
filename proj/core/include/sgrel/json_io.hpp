#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgrel/clustering.hpp"
#include "sgrel/commonsense.hpp"
#include "sgrel/scene_graph.hpp"
#include "sgrel/vocabulary.hpp"

namespace sgrel {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Vocabulary file: {"relations": [names...], "objects": [names...]}.
RelationVocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const RelationVocabulary& v);

/// Hierarchy file: object mapping category name -> array of relation names.
/// Key order fixes category indices; array order fixes within-category order.
RelationHierarchy load_hierarchy(const std::filesystem::path& path,
                                 const RelationVocabulary& v);
void save_hierarchy(const std::filesystem::path& path, const RelationHierarchy& h,
                    const RelationVocabulary& v);

/// Scene graphs are JSONL, one graph per line. Object labels and relations
/// are stored as vocabulary names. Duplicate gt rows are dropped on load;
/// `deduped` (optional) receives the dropped count.
std::vector<SceneGraph> load_scene_graphs(const std::filesystem::path& path,
                                          const RelationVocabulary& v, int* deduped = nullptr);
void save_scene_graphs(const std::filesystem::path& path, const std::vector<SceneGraph>& graphs,
                       const RelationVocabulary& v);

/// Streaming JSONL reader so datasets never need to fit in memory at once.
/// Errors carry the 1-based line number.
class SceneGraphReader {
 public:
  SceneGraphReader(const std::filesystem::path& path, const RelationVocabulary& v);
  /// Next graph (gt deduped), or nullopt at end of file.
  std::optional<SceneGraph> next();
  std::size_t line() const { return line_; }
  int deduped() const { return deduped_; }

 private:
  std::ifstream in_;
  const RelationVocabulary& vocab_;
  std::string path_;
  std::size_t line_ = 0;
  int deduped_ = 0;
};

/// Appending writer matching SceneGraphReader's format.
class SceneGraphWriter {
 public:
  SceneGraphWriter(const std::filesystem::path& path, const RelationVocabulary& v);
  void write(const SceneGraph& g);

 private:
  std::ofstream out_;
  const RelationVocabulary& vocab_;
};

/// Embedding file: object mapping relation name -> array of numbers, all the
/// same length. Row order follows the file.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

/// Triplet sets: JSON array of [subject, relation, object] name triples.
std::set<Triplet> load_triplet_set(const std::filesystem::path& path,
                                   const RelationVocabulary& v);
void save_triplet_set(const std::filesystem::path& path, const std::set<Triplet>& triplets,
                      const RelationVocabulary& v);

/// Alignment sets: {"aligned": [triples...], "violated": [triples...]}.
AlignmentSets load_alignment_sets(const std::filesystem::path& path,
                                  const RelationVocabulary& v);
void save_alignment_sets(const std::filesystem::path& path, const AlignmentSets& sets,
                         const RelationVocabulary& v);

/// Verdict cache: object keyed by the rendered triplet string with values
/// {"triplet": [s,r,o], "aligned": bool, "votes": [bools], "source": string}.
/// Loading merges into `cache` (existing entries win).
void load_verdict_cache(const std::filesystem::path& path, const RelationVocabulary& v,
                        VerdictCache& cache);
void save_verdict_cache(const std::filesystem::path& path, const VerdictCache& cache,
                        const RelationVocabulary& v);

/// Reproducibility block embedded in JSON outputs (and written as a .meta.json
/// sidecar next to JSONL/CSV outputs): version, seed, config hash and the
/// effective config itself (which must be a JSON document). No timestamps, so
/// fixed-seed reruns are byte-identical.
std::string metadata_json(std::uint64_t seed, const std::string& config_dump);

}  // namespace sgrel
