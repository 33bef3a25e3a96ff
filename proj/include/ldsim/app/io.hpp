#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ldsim::app {

// Writes to "<path>.tmp" and renames, so readers never see a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Two-space indented dump with a trailing newline. Key order is sorted, so
// equal documents serialize to equal bytes.
std::string dump_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
// Malformed or missing files throw DataError.
nlohmann::json read_json(const std::filesystem::path& path);

// FNV-1a of the file bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

// Deterministic identifier of one command invocation.
std::string make_run_id(const std::string& command, const nlohmann::json& config,
                        const std::vector<std::string>& input_hashes);

// Path of `p` relative to `base` with forward slashes.
std::string relative_to(const std::filesystem::path& p,
                        const std::filesystem::path& base);

// Timing and bookkeeping that must stay out of the primary outputs. Written
// as "<out>/<command>.run.json".
class RunSidecar {
 public:
  RunSidecar(std::string command, std::filesystem::path out, unsigned workers);
  nlohmann::json& info() { return info_; }
  void write() const;

 private:
  std::string command_;
  std::filesystem::path out_;
  unsigned workers_;
  std::chrono::system_clock::time_point wall_start_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json info_ = nlohmann::json::object();
};

}  // namespace ldsim::app
