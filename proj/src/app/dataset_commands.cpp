#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "ldsim/app/commands.hpp"
#include "ldsim/app/io.hpp"
#include "ldsim/core/error.hpp"
#include "ldsim/core/hash.hpp"
#include "ldsim/core/parallel.hpp"
#include "ldsim/core/rng.hpp"
#include "ldsim/metrics/distribution.hpp"
#include "ldsim/metrics/image_quality.hpp"
#include "ldsim/radiomics/extract.hpp"
#include "ldsim/radiomics/perturb.hpp"
#include "ldsim/volume/manifest.hpp"
#include "ldsim/volume/metaimage.hpp"
#include "ldsim/volume/phantom.hpp"
#include "ldsim/volume/preprocess.hpp"

namespace ldsim::app {
namespace {

using nlohmann::json;
using volume::CtVolume;
using volume::DatasetManifest;
using volume::DoseClass;
using volume::ManifestRecord;
using volume::NoduleMask;

fs::path partial_path(const fs::path& path) {
  fs::path tmp = path;
  tmp.replace_extension(".partial" + path.extension().string());
  return tmp;
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

// Inline ".mha" files keep header and payload together, so one rename
// publishes the whole image.
void save_volume_atomic(const CtVolume& v, const fs::path& path) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = partial_path(path);
  volume::save_volume(v, tmp);
  commit(tmp, path);
}

void save_mask_atomic(const NoduleMask& m, const fs::path& path) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = partial_path(path);
  volume::save_mask(m, tmp);
  commit(tmp, path);
}

void write_manifest_atomic(const DatasetManifest& m, const fs::path& path) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = partial_path(path);
  volume::write_manifest(m, tmp);
  commit(tmp, path);
}

std::string subject_name(int i, int n) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n).size());
  std::string digits = std::to_string(i + 1);
  return "S" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::string json_hash(const json& j) {
  Fnv1a64 h;
  h.update(j.dump());
  return h.hex();
}

// Fails fast on a manifest whose files are missing.
DatasetManifest open_manifest(const fs::path& path) {
  DatasetManifest m = volume::read_manifest(path);
  for (const auto& r : m.records) {
    if (!fs::exists(m.resolve(r.volume_path)))
      throw DataError("manifest " + path.string() + ": missing volume for " + r.subject_id +
                      " (" + r.volume_path + ")");
    for (const auto& mp : r.mask_paths)
      if (!fs::exists(m.resolve(mp)))
        throw DataError("manifest " + path.string() + ": missing mask for " + r.subject_id +
                        " (" + mp + ")");
  }
  return m;
}

CtVolume require_hu(CtVolume v, const std::string& subject) {
  if (v.unit() != volume::IntensityUnit::kHU)
    throw DataError(subject + ": expected an HU volume, got " +
                    std::string(volume::to_string(v.unit())));
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json cmd_phantom(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const auto& pc = cfg.phantom;
  RunSidecar side("phantom", out, cfg.workers);
  const RngStream root(cfg.seed);
  const int n = pc.subjects;

  // Dose and split assignment.
  const int n_ldct = std::clamp(static_cast<int>(std::lround(n * pc.ldct_fraction)), 2, n - 2);
  const int n_val =
      std::clamp(static_cast<int>(std::lround(n_ldct * pc.validation_fraction)), 1, n_ldct - 1);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RngStream split_rng = root.substream("split");
  split_rng.shuffle(std::span<int>(order));
  std::vector<std::string> split(static_cast<std::size_t>(n), "train");
  for (int r = 0; r < n_ldct; ++r)
    split[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
        r < n_val ? "validation" : "test";

  degrade::DegradeConfig acq = pc.acquisition;
  acq.seed = root.substream("acquisition").key();

  struct SubjectOut {
    ManifestRecord record;
    std::optional<ManifestRecord> reference;
    json info;
  };
  std::vector<SubjectOut> subjects(static_cast<std::size_t>(n));
  std::mutex log_mutex;
  std::size_t done = 0;
  const auto t0 = std::chrono::steady_clock::now();

  parallel_for(static_cast<std::size_t>(n), effective_workers(cfg.workers, n), [&](std::size_t i) {
    const std::string sid = subject_name(static_cast<int>(i), n);
    RngStream spec_rng = root.substream("subject", i);
    const volume::PhantomSpec spec = volume::random_thorax_spec(pc.thorax, spec_rng, sid);
    const volume::Phantom ph = volume::generate_phantom(spec, root.substream("phantom", i).key());
    const bool ldct = split[i] != "train";

    SubjectOut& so = subjects[i];
    so.record.subject_id = sid;
    so.record.volume_path = "volumes/" + sid + ".mha";
    json nodules = json::array();
    for (const auto& m : ph.masks) {
      const std::string rel = "masks/" + m.nodule_id() + ".mha";
      save_mask_atomic(m, out / rel);
      so.record.mask_paths.push_back(rel);
      const auto label = m.label();
      nodules.push_back({{"nodule_id", m.nodule_id()},
                         {"malignancy_score", m.malignancy_score()},
                         {"label", label ? json(static_cast<int>(*label)) : json(nullptr)},
                         {"voxels", m.foreground_count()}});
    }
    if (ldct) {
      so.reference = so.record;
      so.reference->volume_path = "reference/" + sid + ".mha";
      so.reference->dose_class = DoseClass::kSDCT;
      so.reference->tube_current_mA = pc.sdct_mA;
      save_volume_atomic(ph.volume, out / so.reference->volume_path);
      save_volume_atomic(degrade::degrade_volume(ph.volume, acq, sid, 1),
                         out / so.record.volume_path);
      so.record.dose_class = DoseClass::kLDCT;
      so.record.tube_current_mA = pc.ldct_mA;
    } else {
      save_volume_atomic(ph.volume, out / so.record.volume_path);
      so.record.dose_class = DoseClass::kSDCT;
      so.record.tube_current_mA = pc.sdct_mA;
    }
    so.info = {{"subject_id", sid},
               {"split", split[i]},
               {"dose_class", volume::to_string(so.record.dose_class)},
               {"nodules", nodules}};
    std::lock_guard<std::mutex> lock(log_mutex);
    ++done;
    spdlog::info("phantom: {}/{} {} ({}) {:.1f}s", done, n, sid, split[i], seconds_since(t0));
  });

  DatasetManifest all, sdct, ldct, val, test, reference;
  for (auto* m : {&all, &sdct, &ldct, &val, &test, &reference}) m->base_dir = out;
  std::size_t n_nodules = 0, n_malignant = 0, n_benign = 0;
  json infos = json::array();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& so = subjects[i];
    all.records.push_back(so.record);
    if (split[i] == "train") sdct.records.push_back(so.record);
    if (split[i] == "validation") val.records.push_back(so.record);
    if (split[i] == "test") test.records.push_back(so.record);
    if (so.reference) {
      ldct.records.push_back(so.record);
      reference.records.push_back(*so.reference);
    }
    for (const auto& nd : so.info.at("nodules")) {
      ++n_nodules;
      if (nd.at("label").is_null()) continue;
      (nd.at("label").get<int>() == 1 ? n_malignant : n_benign)++;
    }
    infos.push_back(so.info);
  }
  write_manifest_atomic(all, out / "manifest.csv");
  write_manifest_atomic(sdct, out / "manifest_sdct.csv");
  write_manifest_atomic(ldct, out / "manifest_ldct.csv");
  write_manifest_atomic(val, out / "manifest_ldct_val.csv");
  write_manifest_atomic(test, out / "manifest_ldct_test.csv");
  write_manifest_atomic(reference, out / "manifest_ldct_reference.csv");

  const json config = to_json(cfg);
  json summary = {{"schema_version", 1},
                  {"run_id", make_run_id("phantom", config, {})},
                  {"seed", cfg.seed},
                  {"counts",
                   {{"subjects", n},
                    {"sdct", sdct.records.size()},
                    {"ldct_validation", val.records.size()},
                    {"ldct_test", test.records.size()},
                    {"nodules", n_nodules},
                    {"malignant", n_malignant},
                    {"non_malignant", n_benign},
                    {"unlabelled", n_nodules - n_malignant - n_benign}}},
                  {"acquisition", degrade::to_json(acq)},
                  {"subjects", infos}};
  write_json(out / "phantom_summary.json", summary);
  side.info()["run_id"] = summary["run_id"];
  side.write();
  return summary;
}

json cmd_degrade(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out) {
  cfg.validate();
  const DatasetManifest in = open_manifest(manifest_path);
  RunSidecar side("degrade", out, cfg.workers);
  degrade::DegradeConfig dc = cfg.degrade;
  // Seed 0 derives the noise seed from the global seed.
  if (dc.seed == 0) dc.seed = RngStream(cfg.seed).substream("degrade").key();
  const json dc_json = degrade::to_json(dc);
  const std::string config_hash = json_hash(dc_json);

  const fs::path state_path = out / "degrade_state.json";
  json state = json::object();
  if (fs::exists(state_path)) {
    try {
      state = read_json(state_path).at("subjects");
    } catch (const std::exception& e) {
      spdlog::warn("degrade: ignoring unreadable resume state ({})", e.what());
      state = json::object();
    }
  }

  DatasetManifest result;
  result.base_dir = out;
  json subjects = json::array();
  json processed = json::array(), skipped = json::array();
  std::vector<std::string> input_hashes;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    const ManifestRecord& r = in.records[i];
    const fs::path src = in.resolve(r.volume_path);
    const std::string rel = "volumes/" + r.subject_id + ".mha";
    const fs::path dst = out / rel;
    const std::string in_hash = file_hash(src);
    input_hashes.push_back(in_hash);

    std::string out_hash;
    if (state.contains(r.subject_id) && fs::exists(dst)) {
      const json& s = state.at(r.subject_id);
      if (s.value("input_hash", "") == in_hash && s.value("config_hash", "") == config_hash &&
          s.value("output_hash", "") == file_hash(dst))
        out_hash = s.at("output_hash").get<std::string>();
    }
    if (!out_hash.empty()) {
      skipped.push_back(r.subject_id);
      spdlog::info("degrade: {}/{} {} unchanged, skipped", i + 1, in.records.size(),
                   r.subject_id);
    } else {
      const CtVolume v = require_hu(volume::load_volume(src), r.subject_id);
      save_volume_atomic(degrade::degrade_volume(v, dc, r.subject_id, cfg.workers), dst);
      out_hash = file_hash(dst);
      state[r.subject_id] = {
          {"input_hash", in_hash}, {"config_hash", config_hash}, {"output_hash", out_hash}};
      write_json(state_path, {{"schema_version", 1}, {"subjects", state}});
      processed.push_back(r.subject_id);
      spdlog::info("degrade: {}/{} {} done {:.1f}s", i + 1, in.records.size(), r.subject_id,
                   seconds_since(t0));
    }

    ManifestRecord o = r;
    o.volume_path = rel;
    o.mask_paths.clear();
    for (const auto& mp : r.mask_paths) o.mask_paths.push_back(relative_to(in.resolve(mp), out));
    switch (dc.method) {
      case degrade::Method::kPhysicsSinogram:
        o.dose_class = DoseClass::kLDCT;
        o.tube_current_mA = r.tube_current_mA * dc.physics.a;
        break;
      case degrade::Method::kSimpleSinogram:
        o.dose_class = DoseClass::kLDCT;
        o.tube_current_mA = r.tube_current_mA * dc.simple.I0_ld / dc.physics.N0A;
        break;
      case degrade::Method::kRoundTrip:
        break;
    }
    result.records.push_back(o);
    subjects.push_back(
        {{"subject_id", r.subject_id}, {"input_hash", in_hash}, {"output_hash", out_hash}});
  }
  write_manifest_atomic(result, out / "manifest.csv");

  json summary = {{"schema_version", 1},
                  {"run_id", make_run_id("degrade", dc_json, input_hashes)},
                  {"method", degrade::to_string(dc.method)},
                  {"config", dc_json},
                  {"subjects", subjects}};
  write_json(out / "degrade_summary.json", summary);
  side.info()["run_id"] = summary["run_id"];
  side.info()["processed"] = processed;
  side.info()["skipped"] = skipped;
  side.write();
  return summary;
}

json cmd_metrics(const RunConfig& cfg, const fs::path& real_path, const fs::path& gen_path,
                 const fs::path& out) {
  cfg.validate();
  const DatasetManifest real = open_manifest(real_path);
  const DatasetManifest gen = open_manifest(gen_path);
  RunSidecar side("metrics", out, cfg.workers);

  std::set<std::string> ids;
  for (const auto& r : gen.records) {
    if (!real.find(r.subject_id))
      throw DataError("metrics: generated subject " + r.subject_id + " has no real counterpart");
    ids.insert(r.subject_id);
  }
  for (const auto& r : real.records)
    if (!gen.find(r.subject_id))
      throw DataError("metrics: real subject " + r.subject_id + " has no generated counterpart");
  const std::vector<std::string> subjects(ids.begin(), ids.end());

  const auto& pre = cfg.preprocess;
  const auto& mc = cfg.metrics;
  auto load_patches = [&](const DatasetManifest& m, const std::string& sid) {
    const CtVolume v = require_hu(volume::load_volume(m.resolve(m.find(sid)->volume_path)), sid);
    const CtVolume n = volume::normalize_unit(volume::clip_window(v, pre.window_lo, pre.window_hi),
                                              pre.window_lo, pre.window_hi);
    return metrics::center_crop_patches(n, mc.patch_size, sid);
  };

  // The scale count is fixed by the patch size; probe it once.
  int scales = mc.ms_ssim_scales;
  {
    metrics::Image2D probe(mc.patch_size, mc.patch_size);
    metrics::ms_ssim(probe, probe, scales, metrics::kMsSsimWeights, {}, &scales);
  }

  std::vector<metrics::PatchSet> real_sets(subjects.size()), gen_sets(subjects.size());
  struct Sums {
    double mae = 0, ssim = 0, ms_ssim = 0;
  };
  std::vector<Sums> sums(subjects.size());
  parallel_for(subjects.size(), effective_workers(cfg.workers, subjects.size()),
               [&](std::size_t i) {
                 real_sets[i] = load_patches(real, subjects[i]);
                 gen_sets[i] = load_patches(gen, subjects[i]);
                 const auto& a = real_sets[i].patches;
                 const auto& b = gen_sets[i].patches;
                 if (a.size() != b.size())
                   throw DataError("metrics: " + subjects[i] +
                                   " has different slice counts in the two datasets");
                 for (std::size_t k = 0; k < a.size(); ++k) {
                   sums[i].mae += metrics::mae(a[k], b[k]);
                   sums[i].ssim += metrics::ssim(a[k], b[k]);
                   sums[i].ms_ssim += metrics::ms_ssim(a[k], b[k], scales);
                 }
               });

  metrics::PatchSet real_all, gen_all;
  real_all.size = gen_all.size = mc.patch_size;
  Sums total;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    real_all.append(real_sets[i]);
    gen_all.append(gen_sets[i]);
    total.mae += sums[i].mae;
    total.ssim += sums[i].ssim;
    total.ms_ssim += sums[i].ms_ssim;
  }
  const auto n_patches = static_cast<double>(real_all.patches.size());
  if (real_all.patches.size() < 2) throw DataError("metrics: need at least two patches");

  const metrics::HandcraftedEmbedder embedder;
  const Eigen::MatrixXd er = metrics::embed_patches(real_all, embedder, cfg.workers);
  const Eigen::MatrixXd eg = metrics::embed_patches(gen_all, embedder, cfg.workers);
  const double fid_value = metrics::fid(metrics::gaussian_stats(er), metrics::gaussian_stats(eg));
  RngStream kid_rng = RngStream(cfg.seed).substream("kid");
  const metrics::KidResult k =
      metrics::kid(er, eg, mc.kid_subset_size, mc.kid_subsets, kid_rng);

  const json config = to_json(cfg);
  json report = {{"schema_version", 1},
                 {"run_id", make_run_id("metrics", {{"seed", cfg.seed},
                                                    {"metrics", config.at("metrics")},
                                                    {"preprocess", config.at("preprocess")}},
                                        {file_hash(real_path), file_hash(gen_path)})},
                 {"subjects", subjects.size()},
                 {"n_patches", real_all.patches.size()},
                 {"patch_size", mc.patch_size},
                 {"mae", total.mae / n_patches},
                 {"ssim", total.ssim / n_patches},
                 {"ms_ssim", total.ms_ssim / n_patches},
                 {"ms_ssim_scales", scales},
                 {"fid", fid_value},
                 {"kid_mean", k.mean},
                 {"kid_std", k.std},
                 {"kid_subset_size", k.subset_size},
                 {"kid_subsets", k.n_subsets},
                 {"embedder_id", embedder.id()}};
  write_json(out / "metrics.json", report);
  side.info()["run_id"] = report["run_id"];
  side.write();
  return report;
}

json cmd_radiomics(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out) {
  cfg.validate();
  const DatasetManifest m = open_manifest(manifest_path);
  RunSidecar side("radiomics", out, cfg.workers);
  const auto& rc = cfg.radiomics;
  const auto& ec = rc.extraction;
  const std::vector<std::string> names = radiomics::feature_schema(ec);
  const RngStream root = RngStream(cfg.seed).substream("perturb");
  static const std::vector<radiomics::PerturbMode> kModes = {
      radiomics::PerturbMode::kDilate, radiomics::PerturbMode::kErode,
      radiomics::PerturbMode::kContourNoise};

  struct SubjectRows {
    std::vector<radiomics::FeatureRow> rows;
    json excluded = json::array();
    json flagged = json::array();
  };
  std::vector<SubjectRows> per(m.records.size());
  std::mutex log_mutex;
  std::size_t done = 0;
  const auto t0 = std::chrono::steady_clock::now();

  parallel_for(m.records.size(), effective_workers(cfg.workers, m.records.size()),
               [&](std::size_t i) {
    const ManifestRecord& r = m.records[i];
    const CtVolume v = require_hu(volume::load_volume(m.resolve(r.volume_path)), r.subject_id);
    const CtVolume smooth = volume::gaussian_smooth_3d(
        volume::clip_window(v, cfg.preprocess.window_lo, cfg.preprocess.window_hi),
        cfg.preprocess, 1);
    const volume::ImageGrid image = smooth.to_grid();
    SubjectRows& out_rows = per[i];
    for (const auto& mp : r.mask_paths) {
      const NoduleMask mask = volume::load_mask(m.resolve(mp));
      if (!mask.matches_geometry(v))
        throw DataError("radiomics: mask " + mp + " does not match the grid of " + r.subject_id);
      const auto label = mask.label();
      if (!label) {
        out_rows.excluded.push_back(mask.nodule_id());
        continue;
      }
      const radiomics::PreparedRoi roi = radiomics::prepare_roi(image, mask.to_grid(), ec);
      auto emit = [&](const std::string& kind, const radiomics::PreparedRoi& p) {
        radiomics::FeatureVector fv = radiomics::extract_prepared(p, ec);
        if (fv.names != names)
          throw DataError("radiomics: feature names differ from the schema");
        if (!fv.all_finite())
          throw NumericalError("radiomics: non-finite feature for " + mask.nodule_id() + " (" +
                               kind + ")");
        radiomics::FeatureRow row;
        row.subject_id = r.subject_id;
        row.nodule_id = mask.nodule_id();
        row.label = static_cast<int>(*label);
        row.perturbation = kind;
        row.values = std::move(fv.values);
        out_rows.rows.push_back(std::move(row));
      };
      emit("none", roi);
      if (!rc.perturbations) continue;
      for (const auto mode : kModes) {
        radiomics::PerturbationSpec ps;
        ps.mode = mode;
        ps.magnitude = rc.perturb_magnitude;
        ps.flip_probability = rc.flip_probability;
        ps.seed = root.substream(mask.nodule_id() + ":" + std::string(to_string(mode))).key();
        radiomics::PerturbResult pr = radiomics::perturb_roi(roi.mask, ps);
        const std::string kind(to_string(mode));
        if (pr.flagged) out_rows.flagged.push_back({{"nodule_id", mask.nodule_id()}, {"perturbation", kind}});
        // An emptied mask falls back to the original contour.
        radiomics::PreparedRoi p{roi.patch,
                                 radiomics::mask_count(pr.mask) ? pr.mask : roi.mask};
        emit(kind, p);
      }
    }
    std::lock_guard<std::mutex> lock(log_mutex);
    ++done;
    spdlog::info("radiomics: {}/{} {} ({} rows) {:.1f}s", done, m.records.size(), r.subject_id,
                 out_rows.rows.size(), seconds_since(t0));
  });

  radiomics::FeatureTable table;
  table.names = names;
  json excluded = json::array(), flagged = json::array();
  std::size_t nodules = 0, malignant = 0;
  for (auto& s : per) {
    for (auto& row : s.rows) {
      if (row.perturbation == "none") {
        ++nodules;
        malignant += row.label == 1;
      }
      table.rows.push_back(std::move(row));
    }
    for (auto& e : s.excluded) excluded.push_back(e);
    for (auto& f : s.flagged) flagged.push_back(f);
  }
  if (nodules == 0) throw DataError("radiomics: no labelled nodules in " + manifest_path.string());

  fs::create_directories(out);
  const fs::path csv = out / "features.csv";
  const fs::path tmp = partial_path(csv);
  radiomics::write_feature_csv(tmp, table);
  commit(tmp, csv);
  const json schema = radiomics::schema_json(ec);
  write_json(out / "feature_schema.json", schema);

  const json config = to_json(cfg);
  json summary = {{"schema_version", 1},
                  {"run_id", make_run_id("radiomics", {{"seed", cfg.seed},
                                                      {"radiomics", config.at("radiomics")},
                                                      {"preprocess", config.at("preprocess")}},
                                         {file_hash(manifest_path)})},
                  {"schema_hash", schema.at("hash")},
                  {"features", names.size()},
                  {"nodules", nodules},
                  {"malignant", malignant},
                  {"non_malignant", nodules - malignant},
                  {"rows", table.rows.size()},
                  {"excluded", excluded},
                  {"flagged", flagged}};
  write_json(out / "radiomics_summary.json", summary);
  side.info()["run_id"] = summary["run_id"];
  side.write();
  return summary;
}

}  // namespace ldsim::app
