#include "ldsim/app/io.hpp"

#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "ldsim/core/error.hpp"
#include "ldsim/core/hash.hpp"

namespace ldsim::app {
namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << text;
    if (!f) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text_atomic(path, dump_json(j));
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string file_hash(const fs::path& path) {
  Fnv1a64 h;
  h.update(read_text(path));
  return h.hex();
}

std::string make_run_id(const std::string& command, const nlohmann::json& config,
                        const std::vector<std::string>& input_hashes) {
  Fnv1a64 h;
  h.update(command);
  h.update(std::string_view("\n"));
  h.update(config.dump());
  for (const auto& s : input_hashes) {
    h.update(std::string_view("\n"));
    h.update(s);
  }
  return h.hex();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return fs::relative(fs::absolute(p), fs::absolute(base)).generic_string();
}

namespace {

std::string utc_string(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

RunSidecar::RunSidecar(std::string command, fs::path out, unsigned workers)
    : command_(std::move(command)),
      out_(std::move(out)),
      workers_(workers),
      wall_start_(std::chrono::system_clock::now()),
      start_(std::chrono::steady_clock::now()) {}

void RunSidecar::write() const {
  nlohmann::json j = info_;
  j["command"] = command_;
  j["workers"] = workers_;
  j["started_utc"] = utc_string(wall_start_);
  j["finished_utc"] = utc_string(std::chrono::system_clock::now());
  j["elapsed_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write_json(out_ / (command_ + ".run.json"), j);
}

}  // namespace ldsim::app
