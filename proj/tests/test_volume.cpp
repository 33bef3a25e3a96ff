#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ldsim/core/error.hpp"
#include "ldsim/volume/ct_volume.hpp"
#include "ldsim/volume/manifest.hpp"
#include "ldsim/volume/metaimage.hpp"
#include "ldsim/volume/phantom.hpp"
#include "ldsim/volume/preprocess.hpp"

namespace ldsim::volume {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ldsim_volume_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

CtVolume make_volume(Dims d, IntensityUnit unit, float fill = 0.0f,
                     Spacing s = {}) {
  return CtVolume(d, s, {}, unit, std::vector<float>(d.count(), fill));
}

void write_bytes(const fs::path& p, const std::string& header,
                 const std::vector<char>& payload) {
  std::ofstream f(p, std::ios::binary);
  f << header;
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

using MetaImageIo = TempDir;

TEST_F(MetaImageIo, HandWrittenInt16Header) {
  const std::string header =
      "ObjectType = Image\nNDims = 3\nDimSize = 4 4 2\n"
      "ElementSpacing = 1 1 2\nOffset = 0 0 0\nElementType = int16\n"
      "ElementDataFile = LOCAL\n";
  std::vector<char> payload(64);
  for (int i = 0; i < 32; ++i) {
    const std::int16_t v = static_cast<std::int16_t>(i - 16);
    std::memcpy(&payload[2 * i], &v, 2);
  }
  write_bytes(dir_ / "a.mha", header, payload);
  const CtVolume v = load_volume(dir_ / "a.mha");
  EXPECT_EQ(v.dims(), (Dims{4, 4, 2}));
  EXPECT_EQ(v.spacing().z, 2.0);
  EXPECT_EQ(v.at(0, 0, 0), -16.0f);
  EXPECT_EQ(v.at(3, 3, 1), 15.0f);
}

TEST_F(MetaImageIo, TruncatedOrOversizedPayloadRejected) {
  const std::string header =
      "NDims = 3\nDimSize = 4 4 2\nElementSpacing = 1 1 1\n"
      "ElementType = int16\nElementDataFile = LOCAL\n";
  write_bytes(dir_ / "short.mha", header, std::vector<char>(63));
  EXPECT_THROW(load_volume(dir_ / "short.mha"), DataError);
  write_bytes(dir_ / "long.mha", header, std::vector<char>(65));
  EXPECT_THROW(load_volume(dir_ / "long.mha"), DataError);
}

TEST_F(MetaImageIo, MissingOrMalformedRejected) {
  EXPECT_THROW(load_volume(dir_ / "nope.mha"), DataError);
  write_bytes(dir_ / "bad.mha", "NDims = 3\nDimSize = 4 x 2\n", {});
  EXPECT_THROW(load_volume(dir_ / "bad.mha"), DataError);
  write_bytes(dir_ / "nodata.mha", "NDims = 3\nDimSize = 1 1 1\n", {});
  EXPECT_THROW(load_volume(dir_ / "nodata.mha"), DataError);
}

TEST_F(MetaImageIo, BigEndianPayloadSwapped) {
  const std::string header =
      "NDims = 3\nDimSize = 2 1 1\nElementType = MET_SHORT\n"
      "BinaryDataByteOrderMSB = True\nElementDataFile = LOCAL\n";
  write_bytes(dir_ / "be.mha", header, {0x01, 0x02, static_cast<char>(0xff),
                                        static_cast<char>(0xfe)});
  const CtVolume v = load_volume(dir_ / "be.mha");
  EXPECT_EQ(v.values()[0], 258.0f);
  EXPECT_EQ(v.values()[1], -2.0f);
}

TEST_F(MetaImageIo, RoundTripIsBitExact) {
  RngStream rng(1);
  std::vector<CtVolume> cases;
  {
    std::vector<float> hu(5 * 4 * 3);
    for (float& x : hu) x = std::round(3000.0f * float(rng.uniform()) - 1500.0f);
    cases.emplace_back(Dims{5, 4, 3}, Spacing{0.7, 0.7, 2.5},
                       Point3{-10.5, 3.25, 100}, IntensityUnit::kHU, hu);
  }
  {
    std::vector<float> hu(6 * 6 * 2);
    for (float& x : hu) x = float(rng.normal() * 300.0);
    cases.emplace_back(Dims{6, 6, 2}, Spacing{}, Point3{}, IntensityUnit::kHU,
                       hu, true);
  }
  {
    std::vector<float> n(7 * 3 * 2);
    for (float& x : n) x = float(rng.uniform());
    cases.emplace_back(Dims{7, 3, 2}, Spacing{1, 1, 1}, Point3{},
                       IntensityUnit::kNormalized, n);
  }
  {
    std::vector<float> raw(8 * 8);
    for (float& x : raw) x = float(rng.uniform_index(4096));
    cases.emplace_back(Dims{8, 8, 1}, Spacing{0.5, 0.5, 1}, Point3{},
                       IntensityUnit::kRawDicom, raw);
  }
  int i = 0;
  for (const CtVolume& v : cases) {
    for (const char* ext : {".mha", ".mhd"}) {
      const fs::path p = dir_ / ("v" + std::to_string(i++) + ext);
      save_volume(v, p);
      const CtVolume back = load_volume(p);
      EXPECT_EQ(back.values(), v.values());
      EXPECT_EQ(back.dims(), v.dims());
      EXPECT_EQ(back.spacing(), v.spacing());
      EXPECT_EQ(back.origin(), v.origin());
      EXPECT_EQ(back.unit(), v.unit());
      EXPECT_EQ(back.smoothed(), v.smoothed());
    }
  }
  EXPECT_TRUE(fs::exists(dir_ / "v1.raw"));
}

TEST_F(MetaImageIo, MaskRoundTrip) {
  std::vector<std::uint8_t> bits(27, 0);
  bits[13] = 1;
  bits[4] = 1;
  const NoduleMask m({3, 3, 3}, {}, {}, bits, "n7", 4.5);
  save_mask(m, dir_ / "m.mha");
  const NoduleMask back = load_mask(dir_ / "m.mha");
  EXPECT_EQ(back.values(), bits);
  EXPECT_EQ(back.nodule_id(), "n7");
  EXPECT_EQ(back.malignancy_score(), 4.5);
  EXPECT_EQ(back.label(), NoduleLabel::kMalignant);
}

TEST(CtVolumeType, InvariantsEnforced) {
  EXPECT_THROW(CtVolume({0, 1, 1}, {}, {}, IntensityUnit::kHU, {}), DataError);
  EXPECT_THROW(CtVolume({1, 1, 1}, {0, 1, 1}, {}, IntensityUnit::kHU, {0.f}),
               DataError);
  EXPECT_THROW(CtVolume({2, 1, 1}, {}, {}, IntensityUnit::kHU, {0.f}),
               DataError);
  EXPECT_THROW(CtVolume({1, 1, 1}, {}, {}, IntensityUnit::kNormalized, {1.5f}),
               DataError);
  EXPECT_THROW(CtVolume({1, 1, 1}, {}, {}, IntensityUnit::kHU, {NAN}),
               DataError);
}

TEST(NoduleMaskType, LabelsFromScore) {
  EXPECT_EQ(label_from_score(4.5), NoduleLabel::kMalignant);
  EXPECT_EQ(label_from_score(3.99), NoduleLabel::kNonMalignant);
  EXPECT_FALSE(label_from_score(4.0).has_value());
  EXPECT_THROW(NoduleMask({2, 1, 1}, {}, {}, {0, 0}, "e", 2), DataError);
  EXPECT_THROW(NoduleMask({2, 1, 1}, {}, {}, {0, 2}, "e", 2), DataError);
  EXPECT_THROW(NoduleMask({1, 1, 1}, {}, {}, {1}, "e", 6), DataError);
}

TEST(Preprocess, HuConvert) {
  const CtVolume raw({3, 1, 1}, {}, {}, IntensityUnit::kRawDicom,
                     {1024.f, 0.f, 100.f});
  const CtVolume hu = hu_convert(raw, 1, -1024);
  EXPECT_EQ(hu.unit(), IntensityUnit::kHU);
  EXPECT_EQ(hu.values()[0], 0.f);
  EXPECT_EQ(hu.values()[1], -1024.f);
  EXPECT_EQ(hu_convert(raw, 2, -1000).values()[2], -800.f);
  EXPECT_THROW(hu_convert(hu, 1, 0), DataError);
}

TEST(Preprocess, ClipWindow) {
  const CtVolume v({3, 1, 1}, {}, {}, IntensityUnit::kHU, {-2000.f, 3000.f, 0.f});
  const CtVolume c = clip_window(v, -1200, 600);
  EXPECT_EQ(c.values(), (std::vector<float>{-1200.f, 600.f, 0.f}));
  EXPECT_THROW(clip_window(v, 600, 600), ConfigError);
}

TEST(Preprocess, NormalizeUnitUsesFixedWindow) {
  const CtVolume v({3, 1, 1}, {}, {}, IntensityUnit::kHU, {-1200.f, 600.f, -300.f});
  const CtVolume n = normalize_unit(v, -1200, 600);
  EXPECT_EQ(n.unit(), IntensityUnit::kNormalized);
  EXPECT_FLOAT_EQ(n.values()[0], 0.0f);
  EXPECT_FLOAT_EQ(n.values()[1], 1.0f);
  EXPECT_FLOAT_EQ(n.values()[2], 0.5f);
  EXPECT_THROW(normalize_unit(v, 1, 1), ConfigError);
}

TEST(Preprocess, GaussianConstantPreserved) {
  const CtVolume v = make_volume({5, 4, 3}, IntensityUnit::kHU, 42.0f);
  const CtVolume s = gaussian_smooth_3d(v, PreprocessConfig{});
  for (float x : s.values()) EXPECT_FLOAT_EQ(x, 42.0f);
  EXPECT_TRUE(s.smoothed());
  EXPECT_THROW(gaussian_smooth_3d(s, PreprocessConfig{}), DataError);
}

TEST(Preprocess, GaussianImpulseCenterWeight) {
  CtVolume base = make_volume({7, 7, 7}, IntensityUnit::kHU);
  std::vector<float> vals(base.values());
  vals[base.index(3, 3, 3)] = 1.0f;
  const CtVolume v = base.with_values(vals, IntensityUnit::kHU, false);
  const CtVolume s = gaussian_smooth_3d(v, PreprocessConfig{});
  const double g0 = 1.0, g1 = std::exp(-1.0 / (2 * 0.25));
  const double w0 = g0 / (g1 + g0 + g1);
  EXPECT_NEAR(s.at(3, 3, 3), w0 * w0 * w0, 1e-6);
  double total = 0;
  for (float x : s.values()) total += x;
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Preprocess, KernelValidation) {
  PreprocessConfig c;
  c.gaussian_kernel = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.gaussian_sigma = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.window_lo = 700;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Preprocess, FullChainMapsIntoUnitRange) {
  RngStream rng(3);
  std::vector<float> raw(6 * 6 * 6);
  for (float& x : raw) x = float(rng.uniform_index(4096));
  const CtVolume v({6, 6, 6}, {}, {}, IntensityUnit::kRawDicom, raw);
  const CtVolume out = preprocess(v, PreprocessConfig{});
  EXPECT_EQ(out.unit(), IntensityUnit::kNormalized);
  EXPECT_TRUE(out.smoothed());
  for (float x : out.values()) {
    EXPECT_TRUE(std::isfinite(x));
    EXPECT_GE(x, 0.0f);
    EXPECT_LE(x, 1.0f);
  }
  // Rerunning on already smoothed HU data skips the filter.
  const CtVolume hu = clip_window(hu_convert(v, 1, -1024), -1200, 600);
  const CtVolume once = gaussian_smooth_3d(hu, PreprocessConfig{});
  EXPECT_EQ(preprocess(once, PreprocessConfig{}).values(),
            normalize_unit(once, -1200, 600).values());
}

TEST(Resample, IdentityAtTargetSpacing) {
  RngStream rng(4);
  std::vector<float> x(4 * 5 * 6);
  for (float& v : x) v = float(rng.normal());
  const CtVolume v({4, 5, 6}, {}, {}, IntensityUnit::kHU, x);
  EXPECT_EQ(resample_isotropic(v, {1, 1, 1}).values(), x);
}

TEST(Resample, ConstantStaysConstant) {
  const CtVolume v = make_volume({5, 5, 4}, IntensityUnit::kHU, -300.f,
                                 {0.7, 0.7, 2.5});
  const CtVolume r = resample_isotropic(v, {1, 1, 1});
  EXPECT_EQ(r.dims(), (Dims{4, 4, 10}));
  for (float x : r.values()) EXPECT_NEAR(x, -300.f, 1e-3);
}

TEST(Resample, LinearRampReproduced) {
  const Dims d{10, 3, 3};
  std::vector<float> x(d.count());
  for (std::size_t k = 0; k < d.nz; ++k)
    for (std::size_t j = 0; j < d.ny; ++j)
      for (std::size_t i = 0; i < d.nx; ++i)
        x[i + d.nx * (j + d.ny * k)] = float(3.0 * (2.0 * i) + 1.0);
  const CtVolume v(d, {2, 1, 1}, {}, IntensityUnit::kHU, x);
  const CtVolume r = resample_isotropic(v, {1, 1, 1});
  ASSERT_EQ(r.dims().nx, 20u);
  // Interior outputs whose 4-tap support lies inside the input.
  for (std::size_t i = 2; i + 6 <= 20; ++i)
    EXPECT_NEAR(r.at(i, 1, 1), 3.0 * i + 1.0, 1e-5) << i;
}

TEST(Resample, MaskStaysBinary) {
  std::vector<std::uint8_t> bits(6 * 6 * 3, 0);
  for (std::size_t i = 0; i < bits.size(); i += 3) bits[i] = 1;
  const NoduleMask m({6, 6, 3}, {0.8, 0.8, 2}, {}, bits, "n", 2);
  const NoduleMask r = resample_isotropic(m, {1, 1, 1});
  EXPECT_EQ(r.dims(), (Dims{5, 5, 6}));
  for (auto b : r.values()) EXPECT_TRUE(b == 0 || b == 1);
  EXPECT_THROW(resample_isotropic(m, {0, 1, 1}), ConfigError);
}

PhantomSpec sphere_spec(double r) {
  PhantomSpec s;
  s.dims = {40, 40, 40};
  s.spacing = {1, 1, 1};
  s.components.push_back({PhantomComponent::Kind::kCylinder,
                          {19.5, 19.5, 0},
                          {18, 18, 0},
                          0,
                          40});
  NoduleSpec n;
  n.id = "ball";
  n.center = {19.3, 19.6, 19.9};
  n.semi_axes = {r, r, r};
  n.hu = 100;
  n.malignancy_score = 2;
  s.nodules.push_back(n);
  return s;
}

TEST(Phantom, DeterministicBySeed) {
  PhantomSpec s = sphere_spec(5);
  s.noise_sigma_hu = 10;
  const auto a = generate_phantom(s, 42), b = generate_phantom(s, 42);
  EXPECT_EQ(a.volume.values(), b.volume.values());
  EXPECT_EQ(a.masks[0].values(), b.masks[0].values());
  EXPECT_NE(generate_phantom(s, 43).volume.values(), a.volume.values());
}

TEST(Phantom, SphereMaskVolume) {
  for (double r : {4.0, 6.5, 9.0}) {
    const auto p = generate_phantom(sphere_spec(r), 1);
    const double expected = 4.0 / 3.0 * std::numbers::pi * r * r * r;
    EXPECT_NEAR(double(p.masks[0].foreground_count()), expected,
                0.05 * expected)
        << r;
  }
}

TEST(Phantom, EmptyOrOverlappingSpecRejected) {
  PhantomSpec empty;
  EXPECT_THROW(generate_phantom(empty, 1), ConfigError);
  PhantomSpec s = sphere_spec(5);
  NoduleSpec twin = s.nodules[0];
  twin.id = "twin";
  twin.center.x += 3;
  s.nodules.push_back(twin);
  EXPECT_THROW(generate_phantom(s, 1), DataError);
}

TEST(Phantom, SpecJsonRoundTrip) {
  PhantomSpec s = sphere_spec(5);
  s.nodules[0].spicule_directions = {{1, 0, 0}, {0, 0, 1}};
  s.nodules[0].spicule_amplitude = 0.5;
  const PhantomSpec back = phantom_spec_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(generate_phantom(back, 3).volume.values(),
            generate_phantom(s, 3).volume.values());
}

TEST(Phantom, RandomThoraxHasDisjointLabelledNodules) {
  ThoraxConfig cfg;
  cfg.min_nodules = 3;
  cfg.max_nodules = 3;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    RngStream rng(seed);
    const PhantomSpec spec = random_thorax_spec(cfg, rng, "s" + std::to_string(seed));
    const Phantom p = generate_phantom(spec, seed);
    EXPECT_EQ(p.masks.size(), spec.nodules.size());
    std::vector<int> cover(p.volume.values().size(), 0);
    for (const auto& m : p.masks) {
      EXPECT_TRUE(m.matches_geometry(p.volume));
      EXPECT_TRUE(m.label().has_value());
      for (std::size_t i = 0; i < cover.size(); ++i) cover[i] += m.values()[i];
    }
    for (int c : cover) EXPECT_LE(c, 1);
  }
}

TEST(Phantom, SpiculatedNoduleLargerThanCore) {
  PhantomSpec s = sphere_spec(4);
  const auto smooth = generate_phantom(s, 1).masks[0].foreground_count();
  s.nodules[0].spicules = 8;
  s.nodules[0].spicule_amplitude = 0.8;
  const auto spiky = generate_phantom(s, 1).masks[0].foreground_count();
  EXPECT_GT(spiky, smooth);
}

TEST(SheppLogan, KnownIntensities) {
  const auto img = shepp_logan_2d(128, 4);
  EXPECT_NEAR(img[64 * 128 + 64], 1.02, 1e-9);  // skull interior, brain
  EXPECT_EQ(img[0], 0.0);
  EXPECT_NEAR(img[64 * 128 + 4], 0.0, 1e-12);
}

using ManifestIo = TempDir;

TEST_F(ManifestIo, RoundTripAndValidation) {
  DatasetManifest m;
  m.records.push_back({"s1", "vol/s1.mha", {"m/a.mha", "m/b.mha"},
                       DoseClass::kSDCT, 300});
  m.records.push_back({"s2", "vol/s2.mha", {}, DoseClass::kLDCT, 80});
  write_manifest(m, dir_ / "manifest.csv");
  const DatasetManifest back = read_manifest(dir_ / "manifest.csv");
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].mask_paths, m.records[0].mask_paths);
  EXPECT_EQ(back.records[1].dose_class, DoseClass::kLDCT);
  EXPECT_EQ(back.records[1].tube_current_mA, 80);
  EXPECT_EQ(back.resolve("vol/s1.mha"), dir_ / "vol/s1.mha");

  DatasetManifest bad = m;
  bad.records[1].tube_current_mA = 81;
  EXPECT_THROW(write_manifest(bad, dir_ / "x.csv"), DataError);
  bad = m;
  bad.records[1].subject_id = "s1";
  EXPECT_THROW(write_manifest(bad, dir_ / "x.csv"), DataError);
  bad = m;
  bad.records[0].mask_paths[1] = "m/a.mha";
  EXPECT_THROW(write_manifest(bad, dir_ / "x.csv"), DataError);
}

TEST_F(ManifestIo, MalformedRowsRejected) {
  std::ofstream(dir_ / "m.csv")
      << "subject_id,volume_path,mask_paths,dose_class,tube_current_mA\n"
      << "s1,a.mha,,SDCT,abc\n";
  EXPECT_THROW(read_manifest(dir_ / "m.csv"), DataError);
  std::ofstream(dir_ / "h.csv") << "id,path\n";
  EXPECT_THROW(read_manifest(dir_ / "h.csv"), DataError);
}

}  // namespace
}  // namespace ldsim::volume
