#include "ldsim/radiomics/extract.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldsim/core/error.hpp"
#include "ldsim/core/hash.hpp"
#include "ldsim/radiomics/firstorder.hpp"
#include "ldsim/radiomics/texture.hpp"
#include "ldsim/radiomics/wavelet.hpp"
#include "ldsim/volume/preprocess.hpp"

namespace ldsim::radiomics {
namespace {

constexpr int kSchemaVersion = 1;

struct Family {
  const char* name;
  const std::vector<std::string>& (*names)();
  FeatureVector (*compute)(const RoiSample&);
};

const std::array<Family, 6>& families() {
  static const std::array<Family, 6> f = {{
      {"firstorder", firstorder_feature_names, firstorder_features},
      {"glcm", glcm_feature_names, glcm_features},
      {"glrlm", glrlm_feature_names, glrlm_features},
      {"glszm", glszm_feature_names, glszm_features},
      {"ngtdm", ngtdm_feature_names, ngtdm_features},
      {"gldm", gldm_feature_names, gldm_features},
  }};
  return f;
}

std::vector<std::string> image_names(const ExtractionConfig& cfg) {
  std::vector<std::string> out{"original"};
  if (cfg.wavelet)
    for (const char* b : {"LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH"})
      out.push_back(std::string("wavelet-") + b);
  return out;
}

void append_families(FeatureVector& out, const ImageGrid& image,
                     const MaskGrid& mask, const std::string& prefix,
                     int bins) {
  const RoiSample roi = discretize_fixed_bins(image, mask, bins);
  for (const auto& fam : families())
    out.append(fam.compute(roi), prefix + "_" + fam.name + "_");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ExtractionConfig::validate() const {
  if (bins < 2 || bins > 255) throw ConfigError("radiomics: bins must be in [2, 255]");
  if (!(target_spacing.x > 0 && target_spacing.y > 0 && target_spacing.z > 0))
    throw ConfigError("radiomics: target spacing must be positive");
  if (!(margin_mm >= 0.0)) throw ConfigError("radiomics: margin must be >= 0");
  mesh.validate();
}

nlohmann::json to_json(const ExtractionConfig& cfg) {
  return {{"bins", cfg.bins},
          {"target_spacing",
           {cfg.target_spacing.x, cfg.target_spacing.y, cfg.target_spacing.z}},
          {"margin_mm", cfg.margin_mm},
          {"mesh_sigma", cfg.mesh.sigma},
          {"mesh_kernel", cfg.mesh.kernel},
          {"wavelet", cfg.wavelet}};
}

ExtractionConfig extraction_config_from_json(const nlohmann::json& j) {
  ExtractionConfig cfg;
  try {
    cfg.bins = j.value("bins", cfg.bins);
    if (j.contains("target_spacing")) {
      const auto& t = j.at("target_spacing");
      cfg.target_spacing = {t.at(0).get<double>(), t.at(1).get<double>(),
                            t.at(2).get<double>()};
    }
    cfg.margin_mm = j.value("margin_mm", cfg.margin_mm);
    cfg.mesh.sigma = j.value("mesh_sigma", cfg.mesh.sigma);
    cfg.mesh.kernel = j.value("mesh_kernel", cfg.mesh.kernel);
    cfg.wavelet = j.value("wavelet", cfg.wavelet);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("radiomics config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> feature_schema(const ExtractionConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& n : shape_feature_names()) names.push_back("original_shape_" + n);
  for (const auto& img : image_names(cfg))
    for (const auto& fam : families())
      for (const auto& n : fam.names()) names.push_back(img + "_" + fam.name + "_" + n);
  return names;
}

nlohmann::json schema_json(const ExtractionConfig& cfg) {
  const auto names = feature_schema(cfg);
  const nlohmann::json config = to_json(cfg);
  Fnv1a64 h;
  h.update(config.dump());
  for (const auto& n : names) {
    h.update(n);
    h.update(std::string_view("\n"));
  }
  return {{"schema_version", kSchemaVersion},
          {"config", config},
          {"feature_count", names.size()},
          {"features", names},
          {"hash", h.hex()}};
}

PreparedRoi prepare_roi(const ImageGrid& image, const MaskGrid& mask,
                        const ExtractionConfig& cfg) {
  cfg.validate();
  if (image.dims != mask.dims) throw DataError("radiomics: image and mask are not congruent");
  const BoundingBox box = mask_bounds(mask);
  const double min_spacing =
      std::min({image.spacing.x, image.spacing.y, image.spacing.z});
  const auto margin = static_cast<std::size_t>(std::ceil(cfg.margin_mm / min_spacing));
  ImageGrid img = crop(image, box, margin);
  MaskGrid m = crop(mask, box, margin);
  if (!(img.spacing == cfg.target_spacing)) {
    img = volume::resample_cubic(img, cfg.target_spacing);
    m = volume::resample_nearest(m, cfg.target_spacing);
    if (mask_count(m) == 0) throw DataError("radiomics: mask vanished after resampling");
  }
  return {zscore_normalize(img), std::move(m)};
}

FeatureVector extract_prepared(const PreparedRoi& roi,
                               const ExtractionConfig& cfg) {
  FeatureVector out;
  out.append(shape_features(roi.mask, cfg.mesh), "original_shape_");
  append_families(out, roi.patch, roi.mask, "original", cfg.bins);
  if (cfg.wavelet) {
    const auto bands = wavelet_decompose(roi.patch);
    const MaskGrid m = downsample_mask(roi.mask);
    for (const auto& b : bands) append_families(out, b.image, m, b.name, cfg.bins);
  }
  if (!out.all_finite()) throw NumericalError("radiomics: non-finite feature value");
  return out;
}

FeatureVector extract_all(const ImageGrid& image, const MaskGrid& mask,
                          const ExtractionConfig& cfg) {
  return extract_prepared(prepare_roi(image, mask, cfg), cfg);
}

FeatureVector extract_all(const volume::CtVolume& image,
                          const volume::NoduleMask& mask,
                          const ExtractionConfig& cfg) {
  if (!mask.matches_geometry(image))
    throw DataError("radiomics: mask geometry differs from its volume");
  return extract_all(image.to_grid(), mask.to_grid(), cfg);
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "subject_id,nodule_id,label,perturbation";
  for (const auto& n : t.names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (const auto& r : t.rows) {
    if (r.values.size() != t.names.size())
      throw DataError("feature csv: row width differs from header");
    for (const auto* s : {&r.subject_id, &r.nodule_id, &r.perturbation})
      if (s->find_first_of(",\n\"") != std::string::npos)
        throw DataError("feature csv: identifier contains a reserved character");
    out << r.subject_id << ',' << r.nodule_id << ',' << r.label << ','
        << r.perturbation;
    for (double v : r.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature csv: empty file " + path.string());
  auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "nodule_id" ||
      header[2] != "label" || header[3] != "perturbation")
    throw DataError("feature csv: unexpected header in " + path.string());
  FeatureTable t;
  t.names.assign(header.begin() + 4, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw DataError("feature csv: wrong column count at line " + std::to_string(line_no));
    FeatureRow r;
    r.subject_id = cells[0];
    r.nodule_id = cells[1];
    r.perturbation = cells[3];
    try {
      r.label = std::stoi(cells[2]);
      for (std::size_t k = 4; k < cells.size(); ++k) {
        std::size_t used = 0;
        r.values.push_back(std::stod(cells[k], &used));
        if (used != cells[k].size() || !std::isfinite(r.values.back()))
          throw std::invalid_argument("not a finite number");
      }
    } catch (const std::exception&) {
      throw DataError("feature csv: bad number at line " + std::to_string(line_no));
    }
    if (r.label != 0 && r.label != 1)
      throw DataError("feature csv: label must be 0 or 1 at line " + std::to_string(line_no));
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace ldsim::radiomics
