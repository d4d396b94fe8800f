#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace sgrel::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kBackendError = 3;

/// Optional JSON config file; flags given on the command line win over it.
struct ConfigFile {
  nlohmann::json values = nlohmann::json::object();
  static ConfigFile load(const std::string& path);
};

struct TrainToyOptions {
  std::string config_path;
  std::uint64_t seed = 7;
  std::string out_dir = "toy-run";
  int d = 16;
  int pairs = 200;
  int relations = 6;
  int steps = 2000;
  double lr = 0.1;
  double w_sup = 1.0, w_sub = 1.0, w_con = 1.0, tau = 0.1;
  int channels = 0;  // > 0 trains through a pooled-feature projection
};

struct InferOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string graphs;
  std::string vocab;
  std::string hierarchy;
  std::string out = "predictions.jsonl";
  std::size_t top_k = 0;  // 0 keeps every candidate
  int jobs = 1;
};

struct ValidateOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string graphs;
  std::string vocab;
  std::string out = "validated.jsonl";
  std::string sets_out = "alignment_sets.json";
  std::string whitelist_path;
  std::string cache_path;
  std::string backend = "mock";
  std::string endpoint;
  std::string model = "default";
  std::string api_key_env = "LLM_API_KEY";
  std::string response_path = "choices.0.message.content";
  std::string request_log;
  std::string mock_blacklist_path;
  std::string mock_default = "yes";
  std::string strategy = "per-triplet";
  std::vector<std::string> vote_template_paths;
  std::string batched_template_path;
  int skip_top = 10;
  int window = 20;
  int votes = 3;
  int jobs = 1;
  double timeout = 30.0;
  int max_retries = 2;
  double backoff = 0.25;
  int max_in_flight = 4;
};

struct EvalOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string pred;
  std::string gt;  // empty reuses the prediction file's gt
  std::string vocab;
  std::string mode = "predcls";
  std::vector<std::size_t> ks = {20, 50, 100};
  std::string train_triplets;
  std::string recall_averaging = "micro";
  std::string out = "eval_report.json";
};

struct ClusterOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string embeddings;
  std::string vocab;  // empty derives the vocabulary from the embedding names
  int k = 3;
  bool l2_normalize = false;
  std::string out = "hierarchy.json";
};

struct DistillSetsOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string sets;
  std::string graphs;
  std::string vocab;
  double lambda_weak = 0.1;
  double lambda_strong = 10.0;
  std::string out = "distill_report.json";
};

int run_train_toy(const TrainToyOptions& opts);
int run_infer(const InferOptions& opts);
int run_validate(const ValidateOptions& opts);
int run_eval(const EvalOptions& opts);
int run_cluster(const ClusterOptions& opts);
int run_distill_sets(const DistillSetsOptions& opts);

/// Writes `metadata` (a JSON document) to path + ".meta.json", the sidecar
/// convention for JSONL/CSV outputs.
void write_meta_sidecar(const std::string& path, const std::string& metadata);

/// Runs fn(0..n-1) across `jobs` threads (inline when jobs <= 1). The first
/// exception thrown by any worker is rethrown after all workers finish.
void parallel_indices(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace sgrel::cli
