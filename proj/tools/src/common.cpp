#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "commands.hpp"
#include "sgrel/errors.hpp"

namespace sgrel::cli {

ConfigFile ConfigFile::load(const std::string& path) {
  ConfigFile cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path);
  try {
    cfg.values = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!cfg.values.is_object()) throw FormatError(path + ": config must be a JSON object");
  return cfg;
}

void write_meta_sidecar(const std::string& path, const std::string& metadata) {
  std::ofstream out(path + ".meta.json");
  if (!out) throw FormatError("cannot write " + path + ".meta.json");
  out << metadata << "\n";
}

void parallel_indices(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sgrel::cli
