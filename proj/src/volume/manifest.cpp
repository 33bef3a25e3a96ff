#include "ldsim/volume/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ldsim/core/error.hpp"
#include "ldsim/volume/metaimage.hpp"

namespace ldsim::volume {
namespace {

constexpr const char* kHeader =
    "subject_id,volume_path,mask_paths,dose_class,tube_current_mA";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

void check_field(const std::string& f) {
  if (f.find_first_of(",;\n\"") != std::string::npos)
    throw DataError("manifest: field contains a reserved character: " + f);
}

}  // namespace

std::string to_string(DoseClass d) {
  return d == DoseClass::kSDCT ? "SDCT" : "LDCT";
}

DoseClass parse_dose_class(const std::string& text) {
  if (text == "SDCT") return DoseClass::kSDCT;
  if (text == "LDCT") return DoseClass::kLDCT;
  throw DataError("manifest: unknown dose class '" + text + "'");
}

std::filesystem::path DatasetManifest::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

const ManifestRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records)
    if (r.subject_id == id) return &r;
  return nullptr;
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.subject_id.empty()) throw DataError("manifest: empty subject_id");
    if (!ids.insert(r.subject_id).second)
      throw DataError("manifest: duplicate subject '" + r.subject_id + "'");
    if (r.volume_path.empty())
      throw DataError("manifest: subject '" + r.subject_id +
                      "' has no volume path");
    const bool low = r.tube_current_mA <= kLowDoseMaxMilliamp;
    if (low != (r.dose_class == DoseClass::kLDCT))
      throw DataError("manifest: subject '" + r.subject_id +
                      "' dose class disagrees with tube current");
    std::set<std::string> paths{r.volume_path};
    for (const auto& m : r.mask_paths)
      if (!paths.insert(m).second)
        throw DataError("manifest: subject '" + r.subject_id +
                        "' repeats path '" + m + "'");
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw DataError("manifest: unexpected header in " + path.string());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5)
      throw DataError("manifest: line " + std::to_string(lineno) +
                      " has " + std::to_string(f.size()) + " fields");
    ManifestRecord r;
    r.subject_id = f[0];
    r.volume_path = f[1];
    if (!f[2].empty()) r.mask_paths = split(f[2], ';');
    r.dose_class = parse_dose_class(f[3]);
    try {
      std::size_t used = 0;
      r.tube_current_mA = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("manifest: line " + std::to_string(lineno) +
                      " has a malformed tube current");
    }
    m.records.push_back(std::move(r));
  }
  m.validate();
  return m;
}

void write_manifest(const DatasetManifest& m,
                    const std::filesystem::path& path) {
  m.validate();
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : m.records) {
    check_field(r.subject_id);
    check_field(r.volume_path);
    out << r.subject_id << ',' << r.volume_path << ',';
    for (std::size_t i = 0; i < r.mask_paths.size(); ++i) {
      check_field(r.mask_paths[i]);
      out << (i ? ";" : "") << r.mask_paths[i];
    }
    out << ',' << to_string(r.dose_class) << ','
        << format_double(r.tube_current_mA) << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("manifest: cannot write " + path.string());
  f << out.str();
  if (!f) throw DataError("manifest: write failed for " + path.string());
}

}  // namespace ldsim::volume
