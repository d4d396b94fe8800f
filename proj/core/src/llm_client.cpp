#include "sgrel/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"
#include "sgrel/errors.hpp"

namespace sgrel {
namespace {

using nlohmann::json;

// Lines shaped like "3. girl riding skateboard" or "3) ...". A prompt with
// two or more of them is treated as a batched list and answered per line.
std::vector<std::string> numbered_lines(const std::string& prompt) {
  std::vector<std::string> lines;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t digits = 0;
    while (i + digits < line.size() && std::isdigit(static_cast<unsigned char>(line[i + digits])))
      ++digits;
    if (digits == 0) continue;
    const std::size_t after = i + digits;
    if (after < line.size() && (line[after] == '.' || line[after] == ')'))
      lines.push_back(line.substr(after + 1));
  }
  return lines;
}

json walk_response_path(const json& root, const std::string& path) {
  const json* node = &root;
  std::istringstream in(path);
  std::string part;
  while (std::getline(in, part, '.')) {
    if (part.empty()) continue;
    const bool numeric = std::all_of(part.begin(), part.end(), [](unsigned char c) {
      return std::isdigit(c);
    });
    if (numeric && node->is_array()) {
      const auto idx = static_cast<std::size_t>(std::stoul(part));
      if (idx >= node->size())
        throw MalformedResponse("response path component '" + part + "' out of range");
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(part)) {
      node = &(*node)[part];
    } else {
      throw MalformedResponse("response path component '" + part + "' missing");
    }
  }
  return *node;
}

struct ParsedEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("endpoint must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpClient : public LlmClient {
 public:
  explicit HttpClient(ClientConfig cfg)
      : cfg_(std::move(cfg)), gate_(std::max(1, cfg_.max_in_flight)) {}

  std::string complete(const std::string& prompt) override {
    gate_.acquire();
    struct Release {
      std::counting_semaphore<>& g;
      ~Release() { g.release(); }
    } release{gate_};
    return complete_locked(prompt);
  }

 private:
  std::string complete_locked(const std::string& prompt) {
    const ParsedEndpoint ep = parse_endpoint(cfg_.endpoint);
    httplib::Client cli(ep.base);
    const auto timeout = std::chrono::milliseconds(
        static_cast<long long>(cfg_.timeout_seconds * 1000.0));
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const json body = {
        {"model", cfg_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", 0},
    };
    const std::string payload = body.dump();

    std::string last_error;
    const int attempts = cfg_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        const double backoff = cfg_.backoff_base_seconds * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      }
      const auto start = std::chrono::steady_clock::now();
      httplib::Result res = cli.Post(ep.path, headers, payload, "application/json");
      const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      log_attempt(prompt, res ? res->status : 0, latency.count(), attempt);

      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;  // connection failure/timeout: retryable
      }
      if (res->status == 401 || res->status == 403)
        throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw BackendUnavailable("backend answered HTTP " + std::to_string(res->status));

      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::exception& e) {
        throw MalformedResponse("response is not JSON: " + std::string(e.what()));
      }
      const json node = walk_response_path(parsed, cfg_.response_path);
      if (node.is_string()) return node.get<std::string>();
      return node.dump();
    }
    throw BackendUnavailable("backend unreachable after " + std::to_string(attempts) +
                             " attempts: " + last_error);
  }

  void log_attempt(const std::string& prompt, int status, long long latency_ms, int attempt) {
    if (cfg_.request_log_path.empty()) return;
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(prompt)));
    const json line = {{"ts_ms", now},
                       {"prompt_fnv1a64", hash},
                       {"status", status},
                       {"latency_ms", latency_ms},
                       {"attempt", attempt}};
    std::lock_guard lock(log_mu_);
    std::ofstream out(cfg_.request_log_path, std::ios::app);
    out << line.dump() << "\n";
  }

  ClientConfig cfg_;
  std::counting_semaphore<> gate_;
  std::mutex log_mu_;
};

}  // namespace

std::string MockClient::complete(const std::string& prompt) {
  {
    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
  }
  auto answer_for = [this](const std::string& text) {
    for (const std::string& banned : rule_.blacklist)
      if (!banned.empty() && text.find(banned) != std::string::npos) return false;
    return rule_.default_answer;
  };

  const std::vector<std::string> items = numbered_lines(prompt);
  if (items.size() >= 2) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i)
      out << (i + 1) << ". " << (answer_for(items[i]) ? "Yes" : "No") << "\n";
    return out.str();
  }
  return answer_for(prompt) ? "Yes" : "No";
}

std::unique_ptr<LlmClient> make_client(const ClientConfig& cfg) {
  if (cfg.backend == Backend::MOCK) return std::make_unique<MockClient>(cfg.mock);
  if (cfg.endpoint.empty())
    throw std::invalid_argument("HTTP backend requires an endpoint URL");
  return std::make_unique<HttpClient>(cfg);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sgrel
