#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sgrel/llm_client.hpp"
#include "sgrel/scene_graph.hpp"
#include "sgrel/vocabulary.hpp"

namespace sgrel {

enum class Strategy { PER_TRIPLET_MAJORITY, BATCHED_LIST };

/// Window and prompting policy. The top skip_top candidates are trusted as-is
/// and the next `window` are validated. Empty template lists fall back to the
/// built-in prompts; vote templates cycle when votes exceeds their count.
/// Every template carries a "{}" placeholder (the batched one receives the
/// numbered list).
struct ValidationConfig {
  int skip_top = 10;
  int window = 20;
  int votes = 3;  // odd
  Strategy strategy = Strategy::PER_TRIPLET_MAJORITY;
  std::vector<std::string> vote_templates;
  std::string batched_template;
};

enum class VerdictSource { CACHE, MODEL, WHITELIST };

struct Verdict {
  Triplet triplet;
  bool aligned = true;
  std::vector<bool> raw_votes;
  VerdictSource source = VerdictSource::MODEL;
};

/// Label-level triplets observed in training annotations; these skip
/// validation entirely.
using TripletWhitelist = std::set<Triplet>;

/// Triplet-keyed verdict store shared across graphs and threads. Insertion is
/// first-writer-wins so concurrent validators converge on one verdict.
class VerdictCache {
 public:
  std::optional<Verdict> lookup(const Triplet& t) const;
  /// Returns the stored verdict if one exists, otherwise inserts v.
  Verdict get_or_insert(const Triplet& t, Verdict v);
  std::size_t size() const;
  std::map<Triplet, Verdict> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::map<Triplet, Verdict> entries_;
};

/// Lowercase "subject relation object" with single spaces.
std::string render_triplet(const Triplet& t, const RelationVocabulary& v);

/// The `votes` differently-phrased yes/no questions for one rendered triplet.
std::vector<std::string> render_vote_prompts(const std::string& triplet_text,
                                             const ValidationConfig& cfg);

/// One prompt enumerating all listed triplets, requesting numbered answers.
std::string render_batched_prompt(const std::vector<std::string>& triplet_texts,
                                  const ValidationConfig& cfg);

/// Polarity of the first standalone yes/no token, nullopt when neither occurs
/// (ambiguous; callers count it as aligned).
std::optional<bool> parse_verdict(const std::string& text);

/// All standalone yes/no tokens in order; nullopt unless exactly `expected`
/// were found (count mismatch triggers the per-triplet fallback).
std::optional<std::vector<bool>> parse_verdict_list(const std::string& text, std::size_t expected);

/// [begin, end) ranks of the validation window within a ranked candidate
/// list: [skip_top, skip_top + window), clipped to the list.
std::pair<std::size_t, std::size_t> validation_window(std::size_t ranked_size,
                                                      const ValidationConfig& cfg);

struct ValidationOutcome {
  SceneGraph graph;
  std::size_t query_count = 0;
  std::size_t cache_hits = 0;
  std::size_t whitelist_hits = 0;
  std::size_t removed = 0;
  /// Backend gave up mid-graph; `graph` is the input unfiltered and the
  /// alignment sets were left untouched.
  bool backend_unavailable = false;
};

/// Validates the window candidates of one ranked graph: whitelist first, then
/// cache, then the model per cfg.strategy. Non-aligned candidates are dropped
/// from the output; everything outside the window passes through. Ambiguous
/// answers count as aligned. BATCHED_LIST falls back to per-triplet majority
/// when the answer count disagrees.
ValidationOutcome validate_graph(const SceneGraph& g, const ValidationConfig& cfg,
                                 LlmClient& client, const RelationVocabulary& v,
                                 const TripletWhitelist& whitelist, VerdictCache& cache,
                                 AlignmentSets& sets);

/// Label-level triplet set across all training ground truth.
TripletWhitelist build_whitelist(const std::vector<SceneGraph>& training_graphs);

}  // namespace sgrel
