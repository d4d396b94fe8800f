#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace sgrel {

enum class Backend { HTTP, MOCK };

/// Deterministic mock policy: any blacklisted substring in the prompt turns
/// the answer negative, otherwise default_answer decides. Numbered list
/// prompts are answered line by line under the same rule.
struct MockRule {
  std::set<std::string> blacklist;
  bool default_answer = true;
};

struct ClientConfig {
  Backend backend = Backend::MOCK;
  std::string endpoint;  // scheme://host[:port]/path
  std::string model = "default";
  double timeout_seconds = 30.0;
  int max_retries = 2;
  double backoff_base_seconds = 0.25;
  int max_in_flight = 4;
  std::string api_key_env = "LLM_API_KEY";
  /// Dotted path into the response JSON; integer components index arrays.
  std::string response_path = "choices.0.message.content";
  /// JSONL file recording timestamp, prompt hash, status and latency per
  /// attempt. Empty disables logging.
  std::string request_log_path;
  MockRule mock;
};

/// Completion backend. complete() is safe to call concurrently; in-flight
/// requests are bounded by the config.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic offline oracle. Keeps every prompt it sees so tests can
/// assert what was (or was not) queried.
class MockClient : public LlmClient {
 public:
  explicit MockClient(MockRule rule) : rule_(std::move(rule)) {}
  std::string complete(const std::string& prompt) override;

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }
  std::size_t prompt_count() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
  }

 private:
  MockRule rule_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

std::unique_ptr<LlmClient> make_client(const ClientConfig& cfg);

/// FNV-1a over the bytes; used for prompt hashes in request logs and config
/// hashes in output metadata.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace sgrel
