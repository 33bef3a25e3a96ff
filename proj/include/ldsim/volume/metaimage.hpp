#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::volume {

enum class ElementType { kInt16, kFloat32, kUInt8 };

// In-memory form of a MetaImage (.mha inline / .mhd + sidecar raw) file.
// Only uncompressed little-endian payloads are produced; big-endian payloads
// are byte-swapped on read.
struct MetaImage {
  Dims dims;
  Spacing spacing;
  Point3 origin;
  ElementType element_type = ElementType::kFloat32;
  // Keys outside the core set (IntensityUnit, Sinogram, NoduleId, ...).
  std::map<std::string, std::string> extra;
  std::vector<float> values;
};

MetaImage read_metaimage(const std::filesystem::path& path);
// A ".mhd" path writes the payload to a sidecar "<stem>.raw"; any other
// extension writes the payload inline (ElementDataFile = LOCAL).
void write_metaimage(const std::filesystem::path& path, const MetaImage& image);

// Picks int16 when every value is an integer representable in int16 and the
// unit is not Normalized, float32 otherwise. Both are exact for float data.
ElementType preferred_element_type(const CtVolume& v);

CtVolume load_volume(const std::filesystem::path& path);
void save_volume(const CtVolume& v, const std::filesystem::path& path);
void save_volume(const CtVolume& v, const std::filesystem::path& path,
                 ElementType type);

NoduleMask load_mask(const std::filesystem::path& path);
void save_mask(const NoduleMask& m, const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace ldsim::volume
