#include "sgrel/commonsense.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "sgrel/errors.hpp"

namespace sgrel {
namespace {

const std::vector<std::string>& default_vote_templates() {
  static const std::vector<std::string> templates = {
      "Is the statement \"{}\" generally plausible in the real world? Answer Yes or No.",
      "Could \"{}\" reasonably appear in an everyday photograph? Answer Yes or No.",
      "Does the phrase \"{}\" describe a physically sensible situation? Answer Yes or No.",
  };
  return templates;
}

const std::string& default_batched_template() {
  static const std::string t =
      "Below is a numbered list of short phrases. For each one, answer Yes if it "
      "describes a plausible real-world situation and No otherwise. Reply with the "
      "matching numbered list of Yes or No answers, one per line.\n{}";
  return t;
}

std::string fill_placeholder(std::string tmpl, const std::string& value) {
  const std::string marker = "{}";
  std::size_t pos = 0;
  while ((pos = tmpl.find(marker, pos)) != std::string::npos) {
    tmpl.replace(pos, marker.size(), value);
    pos += value.size();
  }
  return tmpl;
}

std::vector<std::string> alpha_tokens_lowered(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void check_config(const ValidationConfig& cfg) {
  if (cfg.skip_top < 0) throw std::invalid_argument("skip_top must be non-negative");
  if (cfg.window < 1) throw std::invalid_argument("window must be at least 1");
  if (cfg.votes < 1 || cfg.votes % 2 == 0)
    throw std::invalid_argument("votes must be a positive odd count");
}

}  // namespace

std::optional<Verdict> VerdictCache::lookup(const Triplet& t) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(t);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

Verdict VerdictCache::get_or_insert(const Triplet& t, Verdict v) {
  std::lock_guard lock(mu_);
  const auto [it, inserted] = entries_.try_emplace(t, std::move(v));
  return it->second;
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::map<Triplet, Verdict> VerdictCache::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::string render_triplet(const Triplet& t, const RelationVocabulary& v) {
  std::string out = v.object_names.at(static_cast<std::size_t>(t.subject_label)) + " " +
                    v.relation_names.at(static_cast<std::size_t>(t.relation)) + " " +
                    v.object_names.at(static_cast<std::size_t>(t.object_label));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> render_vote_prompts(const std::string& triplet_text,
                                             const ValidationConfig& cfg) {
  check_config(cfg);
  const auto& templates =
      cfg.vote_templates.empty() ? default_vote_templates() : cfg.vote_templates;
  std::vector<std::string> prompts;
  prompts.reserve(static_cast<std::size_t>(cfg.votes));
  for (int i = 0; i < cfg.votes; ++i)
    prompts.push_back(
        fill_placeholder(templates[static_cast<std::size_t>(i) % templates.size()], triplet_text));
  return prompts;
}

std::string render_batched_prompt(const std::vector<std::string>& triplet_texts,
                                  const ValidationConfig& cfg) {
  std::ostringstream list;
  for (std::size_t i = 0; i < triplet_texts.size(); ++i)
    list << (i + 1) << ". " << triplet_texts[i] << "\n";
  const std::string& tmpl =
      cfg.batched_template.empty() ? default_batched_template() : cfg.batched_template;
  return fill_placeholder(tmpl, list.str());
}

std::optional<bool> parse_verdict(const std::string& text) {
  for (const std::string& token : alpha_tokens_lowered(text)) {
    if (token == "yes") return true;
    if (token == "no") return false;
  }
  return std::nullopt;
}

std::optional<std::vector<bool>> parse_verdict_list(const std::string& text,
                                                    std::size_t expected) {
  std::vector<bool> answers;
  for (const std::string& token : alpha_tokens_lowered(text)) {
    if (token == "yes") answers.push_back(true);
    if (token == "no") answers.push_back(false);
  }
  if (answers.size() != expected) return std::nullopt;
  return answers;
}

std::pair<std::size_t, std::size_t> validation_window(std::size_t ranked_size,
                                                      const ValidationConfig& cfg) {
  check_config(cfg);
  const auto begin = std::min(static_cast<std::size_t>(cfg.skip_top), ranked_size);
  const auto end =
      std::min(static_cast<std::size_t>(cfg.skip_top) + static_cast<std::size_t>(cfg.window),
               ranked_size);
  return {begin, end};
}

ValidationOutcome validate_graph(const SceneGraph& g, const ValidationConfig& cfg,
                                 LlmClient& client, const RelationVocabulary& v,
                                 const TripletWhitelist& whitelist, VerdictCache& cache,
                                 AlignmentSets& sets) {
  check_config(cfg);
  ValidationOutcome out;
  out.graph = g;
  const auto [wb, we] = validation_window(g.pred_candidates.size(), cfg);

  std::map<Triplet, Verdict> resolved;
  std::vector<Triplet> to_query;  // unique, in window order
  for (std::size_t i = wb; i < we; ++i) {
    const Triplet t = g.label_triplet(g.pred_candidates[i]);
    if (resolved.contains(t) ||
        std::find(to_query.begin(), to_query.end(), t) != to_query.end())
      continue;
    if (whitelist.contains(t)) {
      resolved.emplace(t, Verdict{t, true, {}, VerdictSource::WHITELIST});
      ++out.whitelist_hits;
      continue;
    }
    if (auto cached = cache.lookup(t)) {
      cached->source = VerdictSource::CACHE;
      resolved.emplace(t, std::move(*cached));
      ++out.cache_hits;
      continue;
    }
    to_query.push_back(t);
  }

  try {
    if (cfg.strategy == Strategy::BATCHED_LIST && !to_query.empty()) {
      std::vector<std::string> texts;
      texts.reserve(to_query.size());
      for (const Triplet& t : to_query) texts.push_back(render_triplet(t, v));
      const std::string reply = client.complete(render_batched_prompt(texts, cfg));
      ++out.query_count;
      if (const auto answers = parse_verdict_list(reply, to_query.size())) {
        for (std::size_t j = 0; j < to_query.size(); ++j) {
          Verdict vd{to_query[j], (*answers)[j], {(*answers)[j]}, VerdictSource::MODEL};
          resolved.emplace(to_query[j], cache.get_or_insert(to_query[j], std::move(vd)));
        }
        to_query.clear();
      }
      // A count mismatch leaves to_query intact for the per-triplet fallback.
    }

    for (const Triplet& t : to_query) {
      std::vector<bool> votes;
      votes.reserve(static_cast<std::size_t>(cfg.votes));
      for (const std::string& prompt : render_vote_prompts(render_triplet(t, v), cfg)) {
        const std::string reply = client.complete(prompt);
        ++out.query_count;
        votes.push_back(parse_verdict(reply).value_or(true));  // ambiguous counts as aligned
      }
      const auto yes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true));
      Verdict vd{t, yes * 2 > votes.size(), std::move(votes), VerdictSource::MODEL};
      resolved.emplace(t, cache.get_or_insert(t, std::move(vd)));
    }
  } catch (const BackendUnavailable&) {
    out.backend_unavailable = true;
    out.graph = g;
    return out;
  }

  out.graph.pred_candidates.clear();
  out.graph.pred_candidates.reserve(g.pred_candidates.size());
  for (std::size_t i = 0; i < g.pred_candidates.size(); ++i) {
    if (i >= wb && i < we) {
      const Verdict& vd = resolved.at(g.label_triplet(g.pred_candidates[i]));
      if (!vd.aligned) {
        ++out.removed;
        continue;
      }
    }
    out.graph.pred_candidates.push_back(g.pred_candidates[i]);
  }

  for (const auto& [t, vd] : resolved) {
    if (vd.aligned)
      sets.add_aligned(t);
    else
      sets.add_violated(t);
  }
  return out;
}

TripletWhitelist build_whitelist(const std::vector<SceneGraph>& training_graphs) {
  TripletWhitelist whitelist;
  for (const SceneGraph& g : training_graphs)
    for (const GtPredicate& gt : g.gt_predicates) whitelist.insert(g.label_triplet(gt));
  return whitelist;
}

}  // namespace sgrel
