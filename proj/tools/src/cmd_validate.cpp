#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "commands.hpp"
#include "sgrel/commonsense.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/json_io.hpp"

namespace sgrel::cli {
namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

std::set<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::set<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (!line.empty()) lines.insert(line);
  }
  return lines;
}

}  // namespace

int run_validate(const ValidateOptions& opts) {
  const RelationVocabulary vocab = load_vocabulary(opts.vocab);

  ValidationConfig vcfg;
  vcfg.skip_top = opts.skip_top;
  vcfg.window = opts.window;
  vcfg.votes = opts.votes;
  if (opts.strategy == "per-triplet")
    vcfg.strategy = Strategy::PER_TRIPLET_MAJORITY;
  else if (opts.strategy == "batched")
    vcfg.strategy = Strategy::BATCHED_LIST;
  else
    throw std::invalid_argument("unknown strategy '" + opts.strategy +
                                "' (expected per-triplet or batched)");
  for (const std::string& path : opts.vote_template_paths)
    vcfg.vote_templates.push_back(read_text_file(path));
  if (!opts.batched_template_path.empty())
    vcfg.batched_template = read_text_file(opts.batched_template_path);

  ClientConfig ccfg;
  if (opts.backend == "mock")
    ccfg.backend = Backend::MOCK;
  else if (opts.backend == "http")
    ccfg.backend = Backend::HTTP;
  else
    throw std::invalid_argument("unknown backend '" + opts.backend + "' (expected mock or http)");
  ccfg.endpoint = opts.endpoint;
  ccfg.model = opts.model;
  ccfg.timeout_seconds = opts.timeout;
  ccfg.max_retries = opts.max_retries;
  ccfg.backoff_base_seconds = opts.backoff;
  ccfg.max_in_flight = opts.max_in_flight;
  ccfg.api_key_env = opts.api_key_env;
  ccfg.response_path = opts.response_path;
  ccfg.request_log_path = opts.request_log;
  if (!opts.mock_blacklist_path.empty()) ccfg.mock.blacklist = read_lines(opts.mock_blacklist_path);
  if (opts.mock_default == "yes")
    ccfg.mock.default_answer = true;
  else if (opts.mock_default == "no")
    ccfg.mock.default_answer = false;
  else
    throw std::invalid_argument("--mock-default expects yes or no");

  const nlohmann::json effective = {
      {"command", "validate"},   {"graphs", opts.graphs},
      {"vocab", opts.vocab},     {"backend", opts.backend},
      {"strategy", opts.strategy},
      {"skip_top", opts.skip_top}, {"window", opts.window},
      {"votes", opts.votes},     {"whitelist", opts.whitelist_path},
      {"cache", opts.cache_path}, {"jobs", opts.jobs}};
  const std::string metadata = metadata_json(opts.seed, effective.dump());

  const TripletWhitelist whitelist =
      opts.whitelist_path.empty() ? TripletWhitelist{} : load_triplet_set(opts.whitelist_path, vocab);
  VerdictCache cache;
  if (!opts.cache_path.empty() && std::filesystem::exists(opts.cache_path))
    load_verdict_cache(opts.cache_path, vocab, cache);

  const auto client = make_client(ccfg);
  AlignmentSets sets;
  std::mutex sets_mu;
  std::size_t queries = 0, cache_hits = 0, whitelist_hits = 0, removed = 0, unavailable = 0;

  SceneGraphReader reader(opts.graphs, vocab);
  SceneGraphWriter writer(opts.out, vocab);
  std::size_t graph_count = 0;

  constexpr std::size_t kChunk = 64;
  std::vector<SceneGraph> batch;
  std::vector<ValidationOutcome> outcomes;
  auto flush = [&] {
    outcomes.assign(batch.size(), {});
    parallel_indices(batch.size(), opts.jobs, [&](std::size_t i) {
      AlignmentSets local;
      outcomes[i] = validate_graph(batch[i], vcfg, *client, vocab, whitelist, cache, local);
      std::lock_guard lock(sets_mu);
      for (const Triplet& t : local.aligned) sets.add_aligned(t);
      for (const Triplet& t : local.violated) sets.add_violated(t);
    });
    for (const ValidationOutcome& o : outcomes) {
      writer.write(o.graph);
      ++graph_count;
      queries += o.query_count;
      cache_hits += o.cache_hits;
      whitelist_hits += o.whitelist_hits;
      removed += o.removed;
      if (o.backend_unavailable) ++unavailable;
    }
    batch.clear();
  };
  while (auto g = reader.next()) {
    batch.push_back(std::move(*g));
    if (batch.size() >= kChunk) flush();
  }
  flush();

  write_meta_sidecar(opts.out, metadata);
  save_alignment_sets(opts.sets_out, sets, vocab);
  if (!opts.cache_path.empty()) save_verdict_cache(opts.cache_path, cache, vocab);

  const nlohmann::json stats = {{"metadata", nlohmann::json::parse(metadata)},
                                {"graphs", graph_count},
                                {"query_count", queries},
                                {"cache_hits", cache_hits},
                                {"whitelist_hits", whitelist_hits},
                                {"removals", removed},
                                {"backend_unavailable_graphs", unavailable}};
  std::cout << stats.dump(2) << "\n";
  return kOk;
}

}  // namespace sgrel::cli
