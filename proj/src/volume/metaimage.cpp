#include "ldsim/volume/metaimage.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "ldsim/core/error.hpp"

namespace ldsim::volume {
namespace {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "payload encoding assumes a little-endian host");

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_numbers(const std::string& key,
                                  const std::string& value) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw DataError("malformed header: non-numeric value for " + key);
    out.push_back(v);
  }
  return out;
}

std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::kInt16:
      return 2;
    case ElementType::kFloat32:
      return 4;
    case ElementType::kUInt8:
      return 1;
  }
  return 0;
}

ElementType parse_element_type(const std::string& s) {
  if (s == "MET_SHORT" || s == "int16") return ElementType::kInt16;
  if (s == "MET_FLOAT" || s == "float32") return ElementType::kFloat32;
  if (s == "MET_UCHAR" || s == "uint8") return ElementType::kUInt8;
  throw DataError("malformed header: unsupported ElementType " + s);
}

std::string element_type_name(ElementType t) {
  switch (t) {
    case ElementType::kInt16:
      return "MET_SHORT";
    case ElementType::kFloat32:
      return "MET_FLOAT";
    case ElementType::kUInt8:
      return "MET_UCHAR";
  }
  return "?";
}

std::string join_numbers(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void decode_payload(const char* bytes, std::size_t n_bytes, ElementType type,
                    bool big_endian, std::vector<float>& out) {
  const std::size_t esize = element_size(type);
  if (n_bytes != out.size() * esize)
    throw DataError("malformed payload: expected " +
                    std::to_string(out.size() * esize) + " bytes, found " +
                    std::to_string(n_bytes));
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned char buf[4];
    std::memcpy(buf, bytes + i * esize, esize);
    if (big_endian) std::reverse(buf, buf + esize);
    switch (type) {
      case ElementType::kInt16: {
        std::int16_t v;
        std::memcpy(&v, buf, 2);
        out[i] = static_cast<float>(v);
        break;
      }
      case ElementType::kFloat32: {
        float v;
        std::memcpy(&v, buf, 4);
        out[i] = v;
        break;
      }
      case ElementType::kUInt8:
        out[i] = static_cast<float>(buf[0]);
        break;
    }
  }
}

std::vector<char> encode_payload(const std::vector<float>& values,
                                 ElementType type) {
  const std::size_t esize = element_size(type);
  std::vector<char> out(values.size() * esize);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    switch (type) {
      case ElementType::kInt16: {
        if (v != std::nearbyint(v) || v < -32768.0f || v > 32767.0f)
          throw DataError("value not representable as int16");
        const auto s = static_cast<std::int16_t>(v);
        std::memcpy(out.data() + i * 2, &s, 2);
        break;
      }
      case ElementType::kFloat32:
        std::memcpy(out.data() + i * 4, &v, 4);
        break;
      case ElementType::kUInt8: {
        if (v != std::nearbyint(v) || v < 0.0f || v > 255.0f)
          throw DataError("value not representable as uint8");
        out[i] = static_cast<char>(static_cast<std::uint8_t>(v));
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

MetaImage read_metaimage(const fs::path& path) {
  const std::vector<char> bytes = read_all(path);
  std::map<std::string, std::string> header;
  std::size_t pos = 0;
  std::string data_file;
  while (pos < bytes.size()) {
    std::size_t eol = pos;
    while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
    const std::string line(bytes.data() + pos, eol - pos);
    pos = std::min(eol + 1, bytes.size());
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed header line in " + path.string() + ": " +
                      trim(line));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "ElementDataFile") {
      data_file = value;
      break;
    }
    header[key] = value;
  }
  if (data_file.empty())
    throw DataError("malformed header: missing ElementDataFile in " +
                    path.string());

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end())
      throw DataError("malformed header: missing " + key + " in " +
                      path.string());
    return it->second;
  };

  MetaImage img;
  const auto ndims = parse_numbers("NDims", require("NDims"));
  if (ndims.size() != 1 || (ndims[0] != 2 && ndims[0] != 3))
    throw DataError("malformed header: NDims must be 2 or 3");
  const std::size_t nd = static_cast<std::size_t>(ndims[0]);

  const auto dim = parse_numbers("DimSize", require("DimSize"));
  if (dim.size() != nd) throw DataError("malformed header: DimSize arity");
  for (double d : dim)
    if (d < 1 || d != std::floor(d))
      throw DataError("malformed header: DimSize must be positive integers");
  img.dims = {static_cast<std::size_t>(dim[0]),
              static_cast<std::size_t>(dim[1]),
              nd == 3 ? static_cast<std::size_t>(dim[2]) : 1};

  if (header.count("ElementSpacing")) {
    const auto sp = parse_numbers("ElementSpacing", header["ElementSpacing"]);
    if (sp.size() != nd) throw DataError("malformed header: ElementSpacing arity");
    img.spacing = {sp[0], sp[1], nd == 3 ? sp[2] : 1.0};
    if (!(img.spacing.x > 0 && img.spacing.y > 0 && img.spacing.z > 0))
      throw DataError("malformed header: ElementSpacing must be > 0");
  }
  if (header.count("Offset")) {
    const auto off = parse_numbers("Offset", header["Offset"]);
    if (off.size() != nd) throw DataError("malformed header: Offset arity");
    img.origin = {off[0], off[1], nd == 3 ? off[2] : 0.0};
  }
  img.element_type = parse_element_type(require("ElementType"));

  bool big_endian = false;
  for (const char* key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
    auto it = header.find(key);
    if (it != header.end() && (it->second == "True" || it->second == "true"))
      big_endian = true;
  }
  if (header.count("CompressedData") && header["CompressedData"] == "True")
    throw DataError("compressed MetaImage payloads are not supported");

  static const char* kCore[] = {"ObjectType", "NDims", "DimSize",
                                "ElementSpacing", "Offset", "ElementType",
                                "BinaryData", "BinaryDataByteOrderMSB",
                                "ElementByteOrderMSB", "CompressedData"};
  for (const auto& [k, v] : header) {
    if (std::find(std::begin(kCore), std::end(kCore), k) == std::end(kCore))
      img.extra[k] = v;
  }

  img.values.assign(img.dims.count(), 0.0f);
  if (data_file == "LOCAL") {
    decode_payload(bytes.data() + pos, bytes.size() - pos, img.element_type,
                   big_endian, img.values);
  } else {
    const fs::path raw = path.parent_path() / data_file;
    const std::vector<char> payload = read_all(raw);
    decode_payload(payload.data(), payload.size(), img.element_type,
                   big_endian, img.values);
  }
  return img;
}

void write_metaimage(const fs::path& path, const MetaImage& img) {
  const bool sidecar = path.extension() == ".mhd";
  std::ostringstream h;
  h << "ObjectType = Image\n";
  h << "NDims = 3\n";
  h << "BinaryData = True\n";
  h << "BinaryDataByteOrderMSB = False\n";
  h << "CompressedData = False\n";
  h << "Offset = " << join_numbers({img.origin.x, img.origin.y, img.origin.z})
    << "\n";
  h << "ElementSpacing = "
    << join_numbers({img.spacing.x, img.spacing.y, img.spacing.z}) << "\n";
  h << "DimSize = " << img.dims.nx << ' ' << img.dims.ny << ' ' << img.dims.nz
    << "\n";
  for (const auto& [k, v] : img.extra) h << k << " = " << v << "\n";
  h << "ElementType = " << element_type_name(img.element_type) << "\n";

  const std::vector<char> payload = encode_payload(img.values, img.element_type);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  if (sidecar) {
    const fs::path raw = fs::path(path).replace_extension(".raw");
    h << "ElementDataFile = " << raw.filename().string() << "\n";
    const std::string header = h.str();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::ofstream rout(raw, std::ios::binary | std::ios::trunc);
    if (!rout) throw DataError("cannot write " + raw.string());
    rout.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!rout) throw DataError("write failed for " + raw.string());
  } else {
    h << "ElementDataFile = LOCAL\n";
    const std::string header = h.str();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

ElementType preferred_element_type(const CtVolume& v) {
  if (v.unit() == IntensityUnit::kNormalized) return ElementType::kFloat32;
  for (float x : v.values()) {
    if (x != std::nearbyint(x) || x < -32768.0f || x > 32767.0f)
      return ElementType::kFloat32;
  }
  return ElementType::kInt16;
}

CtVolume load_volume(const fs::path& path) {
  MetaImage img = read_metaimage(path);
  IntensityUnit unit = IntensityUnit::kHU;
  if (auto it = img.extra.find("IntensityUnit"); it != img.extra.end())
    unit = parse_intensity_unit(it->second);
  bool smoothed = false;
  if (auto it = img.extra.find("Smoothed"); it != img.extra.end())
    smoothed = it->second == "True";
  return CtVolume(img.dims, img.spacing, img.origin, unit,
                  std::move(img.values), smoothed);
}

void save_volume(const CtVolume& v, const fs::path& path) {
  save_volume(v, path, preferred_element_type(v));
}

void save_volume(const CtVolume& v, const fs::path& path, ElementType type) {
  MetaImage img;
  img.dims = v.dims();
  img.spacing = v.spacing();
  img.origin = v.origin();
  img.element_type = type;
  img.extra["IntensityUnit"] = std::string(to_string(v.unit()));
  if (v.smoothed()) img.extra["Smoothed"] = "True";
  img.values = v.values();
  write_metaimage(path, img);
}

NoduleMask load_mask(const fs::path& path) {
  MetaImage img = read_metaimage(path);
  auto id = img.extra.find("NoduleId");
  auto score = img.extra.find("MalignancyScore");
  if (id == img.extra.end() || score == img.extra.end())
    throw DataError("mask " + path.string() +
                    " lacks NoduleId/MalignancyScore header keys");
  std::vector<std::uint8_t> bits(img.values.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const float v = img.values[i];
    if (v != 0.0f && v != 1.0f)
      throw DataError("mask " + path.string() + " is not binary");
    bits[i] = static_cast<std::uint8_t>(v);
  }
  const auto s = parse_numbers("MalignancyScore", score->second);
  if (s.size() != 1) throw DataError("malformed MalignancyScore");
  return NoduleMask(img.dims, img.spacing, img.origin, std::move(bits),
                    id->second, s[0]);
}

void save_mask(const NoduleMask& m, const fs::path& path) {
  MetaImage img;
  img.dims = m.dims();
  img.spacing = m.spacing();
  img.origin = m.origin();
  img.element_type = ElementType::kUInt8;
  img.extra["NoduleId"] = m.nodule_id();
  img.extra["MalignancyScore"] = format_double(m.malignancy_score());
  img.values.assign(m.values().begin(), m.values().end());
  write_metaimage(path, img);
}

}  // namespace ldsim::volume
