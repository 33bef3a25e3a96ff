#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "ldsim/core/error.hpp"
#include "ldsim/core/rng.hpp"
#include "ldsim/radiomics/extract.hpp"
#include "ldsim/radiomics/firstorder.hpp"
#include "ldsim/radiomics/perturb.hpp"
#include "ldsim/radiomics/shape.hpp"
#include "ldsim/radiomics/texture.hpp"
#include "ldsim/radiomics/wavelet.hpp"
#include "support/texture_oracles.hpp"

namespace ldsim::radiomics {
namespace {

using namespace oracle;

MaskGrid ellipsoid_mask(double a, double b, double c, std::size_t n) {
  MaskGrid m({n, n, n}, {1, 1, 1}, std::uint8_t{0});
  const double h = (n - 1) / 2.0;
  for (std::size_t z = 0; z < n; ++z)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = (x - h) / a, dy = (y - h) / b, dz = (z - h) / c;
        if (dx * dx + dy * dy + dz * dz <= 1.0) m(x, y, z) = 1;
      }
  return m;
}

ImageGrid random_image(Dims d, std::uint64_t seed) {
  RngStream rng(seed);
  ImageGrid g(d, {1, 1, 1});
  for (double& v : g.data) v = rng.normal();
  return g;
}

// ---------------------------------------------------------------- roi

TEST(Zscore, MeanZeroStdOne) {
  ImageGrid g({5, 4, 3}, {1, 1, 1});
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 3.0 + 1e-3 * i;
  const ImageGrid z = zscore_normalize(g);
  double m = 0, v = 0;
  for (double x : z.data) m += x;
  m /= z.data.size();
  for (double x : z.data) v += (x - m) * (x - m);
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(v / z.data.size(), 1.0, 1e-12);
}

TEST(Zscore, AffineInvariantAndLoopOracle) {
  const ImageGrid g = random_image({6, 5, 4}, 1);
  ImageGrid h = g;
  for (double& x : h.data) x = 3.5 * x - 20.0;
  const ImageGrid a = zscore_normalize(g), b = zscore_normalize(h);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-12);
  long double s = 0, s2 = 0;
  for (double x : g.data) s += x;
  const long double mean = s / g.data.size();
  for (double x : g.data) s2 += (x - mean) * (x - mean);
  const long double sd = std::sqrt(s2 / g.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i)
    EXPECT_NEAR(a.data[i], double((g.data[i] - mean) / sd), 1e-12);
}

TEST(Zscore, ConstantPatchThrows) {
  EXPECT_THROW(zscore_normalize(ImageGrid({3, 3, 3}, {1, 1, 1}, 2.0)), DataError);
}

TEST(Discretize, ExtremesAndConstant) {
  const ImageGrid g = random_image({6, 6, 6}, 2);
  MaskGrid m({6, 6, 6}, {1, 1, 1}, std::uint8_t{1});
  const RoiSample r = discretize_fixed_bins(g, m, 32);
  r.validate();
  const auto [lo, hi] = std::minmax_element(g.data.begin(), g.data.end());
  EXPECT_EQ(r.levels.data[lo - g.data.begin()], 1);
  EXPECT_EQ(r.levels.data[hi - g.data.begin()], 32);
  const RoiSample c = discretize_fixed_bins(ImageGrid({3, 3, 3}, {1, 1, 1}, 7.0),
                                            MaskGrid({3, 3, 3}, {1, 1, 1}, std::uint8_t{1}));
  for (auto l : c.levels.data) EXPECT_EQ(l, 1);
}

TEST(Discretize, UniformRampNearEqualOccupancy) {
  // 320 evenly spaced values over the mask; 32 bins should hold 10 each up to
  // one voxel.
  ImageGrid g({320, 1, 1}, {1, 1, 1});
  for (std::size_t i = 0; i < 320; ++i) g.data[i] = i * 0.25;
  MaskGrid m({320, 1, 1}, {1, 1, 1}, std::uint8_t{1});
  const RoiSample r = discretize_fixed_bins(g, m, 32);
  std::vector<int> count(33, 0);
  for (auto l : r.levels.data) ++count[l];
  for (int b = 1; b <= 32; ++b) EXPECT_LE(std::abs(count[b] - 10), 1) << b;
}

TEST(Discretize, OnlyMaskSetsRange) {
  ImageGrid g({4, 1, 1}, {1, 1, 1}, std::vector<double>{-100, 0, 1, 100});
  MaskGrid m({4, 1, 1}, {1, 1, 1}, std::vector<std::uint8_t>{0, 1, 1, 0});
  const RoiSample r = discretize_fixed_bins(g, m, 32);
  EXPECT_EQ(r.levels.data, (std::vector<std::uint8_t>{0, 1, 32, 0}));
  EXPECT_THROW(discretize_fixed_bins(g, MaskGrid({4, 1, 1}, {1, 1, 1}, std::uint8_t{0})),
               DataError);
}

// ---------------------------------------------------------------- shape

TEST(Shape, BallSphericity) {
  const auto f = shape_features(ellipsoid_mask(10, 10, 10, 27));
  EXPECT_GE(f.at("Sphericity"), 0.95);
  EXPECT_LE(f.at("Sphericity"), 1.0);
  const double ideal = 4.0 / 3.0 * std::numbers::pi * 1000.0;
  EXPECT_NEAR(f.at("MeshVolume") / ideal, 1.0, 0.05);
  EXPECT_NEAR(f.at("Maximum3DDiameter"), 20.0, 1.5);
}

TEST(Shape, EllipsoidMajorAxis) {
  const auto f = shape_features(ellipsoid_mask(20, 10, 10, 45));
  const double expected = 4.0 * 20.0 / std::sqrt(5.0);
  EXPECT_NEAR(f.at("MajorAxisLength") / expected, 1.0, 0.03);
  EXPECT_NEAR(f.at("MinorAxisLength") / (40.0 / std::sqrt(5.0)), 1.0, 0.03);
  EXPECT_NEAR(f.at("Elongation"), 0.5, 0.03);
}

TEST(Shape, CubeLessSphericalThanBall) {
  MaskGrid cube({20, 20, 20}, {1, 1, 1}, std::uint8_t{0});
  for (std::size_t z = 2; z < 18; ++z)
    for (std::size_t y = 2; y < 18; ++y)
      for (std::size_t x = 2; x < 18; ++x) cube(x, y, z) = 1;
  // Ball with the same voxel count (16^3 = 4096 -> r ~ 9.93).
  const MaskGrid ball = ellipsoid_mask(9.93, 9.93, 9.93, 25);
  EXPECT_NEAR(double(mask_count(ball)) / 4096.0, 1.0, 0.03);
  EXPECT_LT(shape_features(cube).at("Sphericity"), shape_features(ball).at("Sphericity"));
}

TEST(Shape, MeshIsClosedAndOriented) {
  const TriangleMesh mesh = mask_surface(ellipsoid_mask(6, 4, 5, 17), MeshConfig{});
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  for (const auto& [e, n] : directed) {
    EXPECT_EQ(n, 1);
    const auto back = directed.find({e.second, e.first});
    ASSERT_NE(back, directed.end());
    EXPECT_EQ(back->second, 1);
  }
  EXPECT_GT(mesh.volume(), 0.0);
}

TEST(Shape, SingleVoxelUsesUnitVoxelMesh) {
  MaskGrid m({3, 3, 3}, {1, 1, 1}, std::uint8_t{0});
  m(1, 1, 1) = 1;
  const auto f = shape_features(m);
  EXPECT_TRUE(f.all_finite());
  EXPECT_DOUBLE_EQ(f.at("MeshVolume"), 1.0);
  EXPECT_DOUBLE_EQ(f.at("SurfaceArea"), 6.0);
  EXPECT_NEAR(f.at("Maximum3DDiameter"), std::sqrt(3.0), 1e-12);
  EXPECT_EQ(f.at("Elongation"), 1.0);
}

TEST(Shape, VoxelFaceMeshVolumeCountsVoxels) {
  const MaskGrid m = ellipsoid_mask(3.5, 2.5, 3, 9);
  const TriangleMesh mesh = voxel_face_mesh(m);
  EXPECT_NEAR(mesh.volume(), double(mask_count(m)), 1e-9);
}

TEST(Shape, AnisotropicSpacingScalesVolume) {
  MaskGrid m = ellipsoid_mask(5, 5, 5, 15);
  const double v1 = shape_features(m).at("VoxelVolume");
  m.spacing = {1, 1, 2};
  EXPECT_DOUBLE_EQ(shape_features(m).at("VoxelVolume"), 2 * v1);
}

// ---------------------------------------------------------------- first order

RoiSample roi_from_values(const std::vector<double>& v, int bins = 32) {
  ImageGrid g({v.size(), 1, 1}, {1, 1, 1}, v);
  return discretize_fixed_bins(g, MaskGrid({v.size(), 1, 1}, {1, 1, 1}, std::uint8_t{1}), bins);
}

TEST(FirstOrder, ConstantRoi) {
  const auto f = firstorder_features(roi_from_values(std::vector<double>(10, 0.3)));
  EXPECT_EQ(f.at("Variance"), 0.0);
  EXPECT_EQ(f.at("Entropy"), 0.0);
  EXPECT_EQ(f.at("Uniformity"), 1.0);
  EXPECT_TRUE(f.all_finite());
  EXPECT_EQ(f.size(), 18u);
}

TEST(FirstOrder, TwoVoxels) {
  const auto f = firstorder_features(roi_from_values({0.0, 1.0}));
  EXPECT_DOUBLE_EQ(f.at("Mean"), 0.5);
  EXPECT_DOUBLE_EQ(f.at("Variance"), 0.25);
  EXPECT_DOUBLE_EQ(f.at("Entropy"), 1.0);
  EXPECT_DOUBLE_EQ(f.at("Range"), 1.0);
  EXPECT_DOUBLE_EQ(f.at("Median"), 0.5);
}

TEST(FirstOrder, BruteForceOracle) {
  RngStream rng(3);
  std::vector<double> v(137);
  for (double& x : v) x = rng.normal() * 2 + std::pow(rng.uniform(), 3);
  const RoiSample roi = roi_from_values(v);
  const auto f = firstorder_features(roi);
  const double n = v.size();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0, e = 0;
  for (double x : v) {
    m2 += std::pow(x - mean, 2) / n;
    m3 += std::pow(x - mean, 3) / n;
    m4 += std::pow(x - mean, 4) / n;
    e += x * x;
  }
  EXPECT_NEAR(f.at("Mean"), mean, 1e-12);
  EXPECT_NEAR(f.at("Variance"), m2, 1e-12);
  EXPECT_NEAR(f.at("Skewness"), m3 / std::pow(m2, 1.5), 1e-10);
  EXPECT_NEAR(f.at("Kurtosis"), m4 / (m2 * m2), 1e-10);
  EXPECT_NEAR(f.at("Energy"), e, 1e-9);
  EXPECT_NEAR(f.at("RootMeanSquared"), std::sqrt(e / n), 1e-12);
  // Percentiles: rank q/100 * (n-1) = q * 1.36; 10th -> between 13 and 14.
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  EXPECT_NEAR(f.at("10Percentile"), s[13] + 0.6 * (s[14] - s[13]), 1e-12);
  EXPECT_NEAR(f.at("Median"), s[68], 1e-12);
  std::map<int, int> hist;
  for (std::size_t i = 0; i < v.size(); ++i) ++hist[roi.levels.data[i]];
  double ent = 0, uni = 0;
  for (auto [l, c] : hist) {
    ent -= c / n * std::log2(c / n);
    uni += (c / n) * (c / n);
  }
  EXPECT_NEAR(f.at("Entropy"), ent, 1e-12);
  EXPECT_NEAR(f.at("Uniformity"), uni, 1e-12);
}

// ---------------------------------------------------------------- texture


TEST(Texture, HandGridCooccurrence) {
  // 4x4x1 two-level grid.
  const std::vector<int> g = {1, 1, 2, 2,  //
                              1, 1, 2, 2,  //
                              1, 2, 2, 1,  //
                              2, 2, 1, 1};
  RoiSample r;
  r.bins = 2;
  r.mask = MaskGrid({4, 4, 1}, {1, 1, 1}, std::uint8_t{1});
  r.levels = LevelGrid({4, 4, 1}, {1, 1, 1}, std::uint8_t{0});
  r.image = ImageGrid({4, 4, 1}, {1, 1, 1});
  for (int i = 0; i < 16; ++i) r.levels.data[i] = std::uint8_t(g[i]);
  // Horizontal neighbours by hand: rows give (1,1),(1,2),(2,2) / (1,1),(1,2),
  // (2,2) / (1,2),(2,2),(2,1) / (2,2),(2,1),(1,1).
  Eigen::MatrixXd h(2, 2);
  h << 2 * 3, 5, 5, 2 * 4;
  EXPECT_EQ(glcm_matrix(r, {1, 0, 0}), h);
  for (const auto& d : unique_directions()) EXPECT_EQ(glcm_matrix(r, d), glcm_oracle(r, d));
}

TEST(Texture, MatricesEqualEnumerationOracles) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Dims d{2 + seed % 5, 3 + seed % 4, 1 + seed % 6};
    const RoiSample r = random_roi(d, 4, 0.7, seed);
    for (const auto& dir : unique_directions()) {
      ASSERT_EQ(glcm_matrix(r, dir), glcm_oracle(r, dir)) << seed;
      ASSERT_EQ(glrlm_matrix(r, dir), glrlm_oracle(r, dir)) << seed;
    }
    ASSERT_EQ(glszm_matrix(r), glszm_oracle(r)) << seed;
    ASSERT_EQ(gldm_matrix(r), gldm_oracle(r)) << seed;
    const Ngtdm a = ngtdm_matrix(r), b = ngtdm_oracle(r);
    ASSERT_EQ(a.n, b.n) << seed;
    ASSERT_LT((a.s - b.s).cwiseAbs().maxCoeff(), 1e-12) << seed;
  }
}

TEST(Texture, SixCubedRoiMatchesOracles) {
  const RoiSample r = random_roi({6, 6, 6}, 5, 0.8, 99);
  for (const auto& dir : unique_directions()) {
    EXPECT_EQ(glcm_matrix(r, dir), glcm_oracle(r, dir));
    EXPECT_EQ(glrlm_matrix(r, dir), glrlm_oracle(r, dir));
  }
  EXPECT_EQ(glszm_matrix(r), glszm_oracle(r));
  EXPECT_EQ(gldm_matrix(r), gldm_oracle(r));
}

TEST(Texture, ConstantRoi) {
  RoiSample r = random_roi({5, 1, 1}, 1, 1.0, 0);
  const auto glcm = glcm_features(r);
  EXPECT_EQ(glcm.at("Contrast"), 0.0);
  EXPECT_EQ(glcm.at("Idm"), 1.0);
  EXPECT_EQ(glcm.at("Correlation"), 1.0);
  // The whole 5-voxel line is one run along x.
  const Eigen::MatrixXd runs = glrlm_matrix(r, {1, 0, 0});
  EXPECT_EQ(runs(0, 4), 1.0);
  EXPECT_EQ(runs.sum(), 1.0);
  for (const auto& f : {glcm, glrlm_features(r), glszm_features(r), ngtdm_features(r), gldm_features(r)})
    EXPECT_TRUE(f.all_finite());
}

TEST(Texture, SingleVoxelFinite) {
  RoiSample r = random_roi({3, 3, 3}, 3, 0.0, 5);
  ASSERT_EQ(r.voxel_count(), 1u);
  for (const auto& f : {glcm_features(r), glrlm_features(r), glszm_features(r),
                        ngtdm_features(r), gldm_features(r)}) {
    EXPECT_TRUE(f.all_finite());
  }
  EXPECT_EQ(glcm_features(r).at("Contrast"), 0.0);
}

TEST(Texture, FeatureCounts) {
  const RoiSample r = random_roi({5, 5, 5}, 8, 0.9, 7);
  EXPECT_EQ(glcm_features(r).size(), 24u);
  EXPECT_EQ(glrlm_features(r).size(), 16u);
  EXPECT_EQ(glszm_features(r).size(), 16u);
  EXPECT_EQ(ngtdm_features(r).size(), 5u);
  EXPECT_EQ(gldm_features(r).size(), 14u);
}

TEST(Texture, GlcmFeaturesMatchDirectFormulas) {
  Eigen::MatrixXd c(3, 3);
  c << 4, 2, 1, 2, 6, 3, 1, 3, 8;
  const auto f = glcm_features_from(c);
  const Eigen::MatrixXd p = c / c.sum();
  double contrast = 0, energy = 0, idm = 0, autoc = 0, ent = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      contrast += (i - j) * (i - j) * p(i, j);
      energy += p(i, j) * p(i, j);
      idm += p(i, j) / (1.0 + (i - j) * (i - j));
      autoc += (i + 1) * (j + 1) * p(i, j);
      ent -= p(i, j) * std::log2(p(i, j));
    }
  EXPECT_NEAR(f.at("Contrast"), contrast, 1e-14);
  EXPECT_NEAR(f.at("JointEnergy"), energy, 1e-14);
  EXPECT_NEAR(f.at("Idm"), idm, 1e-14);
  EXPECT_NEAR(f.at("Autocorrelation"), autoc, 1e-14);
  EXPECT_NEAR(f.at("JointEntropy"), ent, 1e-14);
  EXPECT_GT(f.at("Correlation"), 0.0);
  EXPECT_LE(f.at("Correlation"), 1.0);
  EXPECT_GE(f.at("MCC"), 0.0);
  EXPECT_LE(f.at("MCC"), 1.0);
}

TEST(Texture, CheckerboardMaximizesFaceContrast) {
  // Same 50/50 histogram for all patterns; the checkerboard differs across
  // every face-neighbour pair, so its face-direction contrast is maximal.
  const std::size_t n = 4;
  auto make = [&](auto level_of) {
    RoiSample r;
    r.bins = 2;
    r.mask = MaskGrid({n, n, n}, {1, 1, 1}, std::uint8_t{1});
    r.levels = LevelGrid({n, n, n}, {1, 1, 1}, std::uint8_t{0});
    r.image = ImageGrid({n, n, n}, {1, 1, 1});
    for (std::size_t z = 0; z < n; ++z)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) r.levels(x, y, z) = level_of(x, y, z);
    return r;
  };
  auto face_contrast = [](const RoiSample& r) {
    double c = 0;
    for (int k = 0; k < 3; ++k)
      c += glcm_features_from(glcm_matrix(r, unique_directions()[k])).at("Contrast");
    return c / 3;
  };
  const double checker = face_contrast(make([](auto x, auto y, auto z) { return 1 + (x + y + z) % 2; }));
  EXPECT_DOUBLE_EQ(checker, 1.0);
  std::vector<RoiSample> others = {
      make([](auto x, auto, auto) { return 1 + x % 2; }),
      make([](auto x, auto y, auto) { return 1 + (x + y) % 2; }),
      make([&](auto x, auto, auto) { return 1 + (x >= n / 2); }),
      make([&](auto, auto, auto z) { return 1 + (z >= n / 2); })};
  RngStream rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::uint8_t> lv(n * n * n, 1);
    std::fill(lv.begin(), lv.begin() + lv.size() / 2, 2);
    rng.shuffle(std::span<std::uint8_t>(lv));
    RoiSample r = make([](auto, auto, auto) { return 1; });
    r.levels.data = lv;
    others.push_back(r);
  }
  for (const auto& r : others) EXPECT_LT(face_contrast(r), checker);
}

// ---------------------------------------------------------------- wavelet

TEST(Wavelet, ConstantInput) {
  const double c = 1.7;
  const auto bands = wavelet_decompose(ImageGrid({6, 4, 8}, {1, 1, 1}, c));
  EXPECT_EQ(bands[0].name, "wavelet-LLL");
  EXPECT_EQ(bands[7].name, "wavelet-HHH");
  for (double v : bands[0].image.data) EXPECT_NEAR(v, c * std::pow(2.0, 1.5), 1e-14);
  for (int b = 1; b < 8; ++b)
    for (double v : bands[b].image.data) EXPECT_EQ(v, 0.0);
}

TEST(Wavelet, EnergyConservation) {
  const ImageGrid g = random_image({8, 6, 10}, 11);
  double in = 0, out = 0;
  for (double v : g.data) in += v * v;
  for (const auto& b : wavelet_decompose(g))
    for (double v : b.image.data) out += v * v;
  EXPECT_NEAR(out, in, 1e-9);
}

TEST(Wavelet, ImpulseResponse) {
  ImageGrid g({4, 4, 4}, {1, 1, 1}, 0.0);
  g(2, 0, 3) = 1.0;  // even x, even y, odd z
  const auto bands = wavelet_decompose(g);
  for (int b = 0; b < 8; ++b) {
    const double v = bands[b].image(1, 0, 1);
    EXPECT_NEAR(std::abs(v), std::pow(2.0, -1.5), 1e-15);
    // Odd position along z flips the sign of the z high-pass.
    EXPECT_EQ(v < 0, (b & 1) == 1);
    double rest = 0;
    for (double x : bands[b].image.data) rest += std::abs(x);
    EXPECT_NEAR(rest, std::abs(v), 1e-15);
  }
}

TEST(Wavelet, OddDimsAndMask) {
  const auto bands = wavelet_decompose(random_image({5, 3, 2}, 12));
  EXPECT_EQ(bands[3].image.dims, (Dims{3, 2, 1}));
  EXPECT_EQ(bands[3].image.spacing, (Spacing{2, 2, 2}));
  MaskGrid m({5, 5, 5}, {1, 1, 1}, std::uint8_t{0});
  m(1, 1, 1) = 1;  // no even-index voxel survives nearest sampling
  const MaskGrid d = downsample_mask(m);
  EXPECT_EQ(mask_count(d), 1u);
  EXPECT_EQ(d(0, 0, 0), 1);
  EXPECT_THROW(wavelet_decompose(ImageGrid({1, 4, 4}, {1, 1, 1})), DataError);
}

// ---------------------------------------------------------------- perturbation

TEST(Perturb, DilationGrows) {
  const MaskGrid m = ellipsoid_mask(4, 4, 4, 15);
  const auto r = perturb_roi(m, {PerturbMode::kDilate, 0.15, 0.3, 1});
  EXPECT_GT(mask_count(r.mask), mask_count(m));
  EXPECT_GE(double(mask_count(r.mask)) / mask_count(m) - 1.0, 0.15);
  EXPECT_FALSE(r.flagged);
}

TEST(Perturb, LargeBallNeedsExactlyOneStep) {
  const MaskGrid m = ellipsoid_mask(15, 15, 15, 35);
  const auto r = perturb_roi(m, {PerturbMode::kDilate, 0.15, 0.3, 1});
  EXPECT_EQ(r.steps, 1);
  // Counting oracle: the added shell is about 3 / r of the volume.
  const double growth = double(mask_count(r.mask)) / mask_count(m) - 1.0;
  EXPECT_GE(growth, 0.15);
  EXPECT_NEAR(growth, 0.2, 0.03);
}

TEST(Perturb, ErosionShrinksAndStopsBeforeEmpty) {
  const MaskGrid m = ellipsoid_mask(5, 5, 5, 13);
  const auto r = perturb_roi(m, {PerturbMode::kErode, 0.15, 0.3, 1});
  EXPECT_LE(double(mask_count(r.mask)) / mask_count(m), 0.85);
  EXPECT_GT(mask_count(r.mask), 0u);
  MaskGrid one({3, 3, 3}, {1, 1, 1}, std::uint8_t{0});
  one(1, 1, 1) = 1;
  const auto s = perturb_roi(one, {PerturbMode::kErode, 0.15, 0.3, 1});
  EXPECT_TRUE(s.flagged);
  EXPECT_EQ(mask_count(s.mask), 1u);
}

TEST(Perturb, ContourNoiseDeterministicAndConnected) {
  const MaskGrid m = ellipsoid_mask(6, 5, 4, 17);
  const PerturbationSpec a{PerturbMode::kContourNoise, 0.15, 0.3, 42};
  const auto r1 = perturb_roi(m, a), r2 = perturb_roi(m, a);
  EXPECT_EQ(r1.mask.data, r2.mask.data);
  EXPECT_NE(r1.mask.data, m.data);
  EXPECT_EQ(largest_component(r1.mask).data, r1.mask.data);
  PerturbationSpec b = a;
  b.seed = 43;
  EXPECT_NE(perturb_roi(m, b).mask.data, r1.mask.data);
}

TEST(Perturb, MagnitudeValidated) {
  const MaskGrid m = ellipsoid_mask(3, 3, 3, 9);
  EXPECT_THROW(perturb_roi(m, {PerturbMode::kDilate, 0.0, 0.3, 1}), ConfigError);
  EXPECT_THROW(perturb_roi(m, {PerturbMode::kDilate, 0.5, 0.3, 1}), ConfigError);
  EXPECT_THROW(parse_perturb_mode("shrink"), ConfigError);
}

// ---------------------------------------------------------------- extraction

struct Scene {
  ImageGrid image;
  MaskGrid mask;
};

Scene nodule_scene(Dims d, long ox, long oy, long oz, std::uint64_t seed) {
  Scene s{ImageGrid(d, {1, 1, 1}), MaskGrid(d, {1, 1, 1}, std::uint8_t{0})};
  const ImageGrid noise = random_image({14, 14, 14}, seed);
  for (std::size_t z = 0; z < 14; ++z)
    for (std::size_t y = 0; y < 14; ++y)
      for (std::size_t x = 0; x < 14; ++x) {
        const double r = std::hypot(x - 6.5, y - 6.5, z - 6.5);
        const std::size_t X = x + ox, Y = y + oy, Z = z + oz;
        s.image(X, Y, Z) = (r < 5 ? 1.0 : 0.0) + 0.2 * noise(x, y, z);
        s.mask(X, Y, Z) = r < 5 ? 1 : 0;
      }
  return s;
}

TEST(Extract, FeatureCountIs851) {
  const ExtractionConfig cfg;
  EXPECT_EQ(feature_schema(cfg).size(), 851u);
  const Scene s = nodule_scene({20, 20, 20}, 3, 3, 3, 1);
  const FeatureVector f = extract_all(s.image, s.mask, cfg);
  EXPECT_EQ(f.size(), 851u);
  EXPECT_EQ(f.names, feature_schema(cfg));
  EXPECT_TRUE(f.all_finite());
  const std::set<std::string> unique(f.names.begin(), f.names.end());
  EXPECT_EQ(unique.size(), 851u);
  EXPECT_EQ(f.names.front(), "original_shape_MeshVolume");
  EXPECT_EQ(f.names.back(), "wavelet-HHH_gldm_LargeDependenceHighGrayLevelEmphasis");
}

TEST(Extract, DeterministicAndTranslationInvariant) {
  const ExtractionConfig cfg;
  const Scene a = nodule_scene({24, 24, 24}, 4, 4, 4, 2);
  const Scene b = nodule_scene({24, 24, 24}, 7, 5, 6, 2);
  const FeatureVector fa = extract_all(a.image, a.mask, cfg);
  EXPECT_EQ(fa.values, extract_all(a.image, a.mask, cfg).values);
  const FeatureVector fb = extract_all(b.image, b.mask, cfg);
  for (std::size_t k = 0; k < fa.size(); ++k)
    EXPECT_NEAR(fa.values[k], fb.values[k], 1e-9 * (1 + std::abs(fa.values[k]))) << fa.names[k];
}

TEST(Extract, ShapeIgnoresIntensities) {
  const ExtractionConfig cfg;
  Scene a = nodule_scene({20, 20, 20}, 3, 3, 3, 3);
  const FeatureVector fa = extract_all(a.image, a.mask, cfg);
  for (double& v : a.image.data) v = v * v + 3;
  const FeatureVector fb = extract_all(a.image, a.mask, cfg);
  for (std::size_t k = 0; k < 14; ++k) EXPECT_EQ(fa.values[k], fb.values[k]);
}

TEST(Extract, SingleVoxelRoiFinite) {
  Scene s = nodule_scene({20, 20, 20}, 3, 3, 3, 4);
  std::fill(s.mask.data.begin(), s.mask.data.end(), 0);
  s.mask(10, 10, 10) = 1;
  const FeatureVector f = extract_all(s.image, s.mask, ExtractionConfig{});
  EXPECT_EQ(f.size(), 851u);
  EXPECT_TRUE(f.all_finite());
}

TEST(Extract, ResamplesAnisotropicInput) {
  Scene s = nodule_scene({20, 20, 20}, 3, 3, 3, 5);
  s.image.spacing = s.mask.spacing = {0.8, 0.8, 1.5};
  const PreparedRoi roi = prepare_roi(s.image, s.mask, ExtractionConfig{});
  EXPECT_EQ(roi.patch.spacing, (Spacing{1, 1, 1}));
  EXPECT_EQ(roi.patch.dims, roi.mask.dims);
  EXPECT_GT(mask_count(roi.mask), 0u);
}

TEST(Extract, SchemaHashStable) {
  ExtractionConfig cfg;
  const auto a = schema_json(cfg), b = schema_json(cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.at("feature_count"), 851);
  cfg.bins = 16;
  EXPECT_NE(schema_json(cfg).at("hash"), a.at("hash"));
  cfg.wavelet = false;
  EXPECT_EQ(feature_schema(cfg).size(), 14u + 93u);
}

TEST(Extract, CsvRoundTripExact) {
  FeatureTable t;
  t.names = {"a", "b"};
  t.rows.push_back({"s1", "s1_n0", 1, "none", {0.1, -1e-300}});
  t.rows.push_back({"s2", "s2_n1", 0, "dilate", {1.0 / 3.0, 12345.678}});
  const auto path = std::filesystem::temp_directory_path() / "ldsim_features_test.csv";
  write_feature_csv(path, t);
  const FeatureTable u = read_feature_csv(path);
  EXPECT_EQ(u.names, t.names);
  ASSERT_EQ(u.rows.size(), 2u);
  EXPECT_EQ(u.rows[1].values, t.rows[1].values);
  EXPECT_EQ(u.rows[0].values, t.rows[0].values);
  EXPECT_EQ(u.rows[1].perturbation, "dilate");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ldsim::radiomics
