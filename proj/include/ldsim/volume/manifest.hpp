#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ldsim::volume {

enum class DoseClass { kSDCT, kLDCT };

std::string to_string(DoseClass d);
DoseClass parse_dose_class(const std::string& text);

// Tube currents at or below this value are low-dose acquisitions.
inline constexpr double kLowDoseMaxMilliamp = 80.0;

struct ManifestRecord {
  std::string subject_id;
  std::string volume_path;
  std::vector<std::string> mask_paths;
  DoseClass dose_class = DoseClass::kSDCT;
  double tube_current_mA = 0.0;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  // Directory that relative paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
  const ManifestRecord* find(const std::string& subject_id) const;
  void validate() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m,
                    const std::filesystem::path& path);

}  // namespace ldsim::volume
