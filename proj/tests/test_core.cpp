#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "ldsim/core/error.hpp"
#include "ldsim/core/fft.hpp"
#include "ldsim/core/hash.hpp"
#include "ldsim/core/parallel.hpp"
#include "ldsim/core/rng.hpp"

namespace ldsim {
namespace {

TEST(Philox, KnownAnswerVectors) {
  using A4 = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          {0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          {0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Rng, SameSeedSameSequence) {
  RngStream a(42), b(42), c(43);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a());
    xb.push_back(b());
    xc.push_back(c());
  }
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, xc);
}

TEST(Rng, SubstreamsAreKeyedByTagAndIndex) {
  const RngStream root(7);
  auto s1 = root.substream("slice", 3);
  auto s2 = root.substream("slice", 3);
  auto s3 = root.substream("slice", 4);
  auto s4 = root.substream("other", 3);
  EXPECT_EQ(s1.key(), s2.key());
  EXPECT_NE(s1.key(), s3.key());
  EXPECT_NE(s1.key(), s4.key());
  EXPECT_EQ(s1(), s2());
}

TEST(Rng, UniformMoments) {
  RngStream r(1);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12, 0.002);
}

TEST(Rng, NormalMoments) {
  RngStream r(2);
  const int n = 400000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
    s3 += z * z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s3 / n, 0.0, 0.03);
  EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  RngStream r(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0));
}

TEST(Rng, ShuffleIsPermutation) {
  RngStream r(4);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  r.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Parallel, ResultIndependentOfWorkers) {
  for (unsigned workers : {1u, 2u, 5u}) {
    std::vector<double> out(1000);
    parallel_for(out.size(), workers, [&](std::size_t i) {
      RngStream r = RngStream(9).substream("i", i);
      out[i] = r.normal();
    });
    std::vector<double> ref(1000);
    for (std::size_t i = 0; i < ref.size(); ++i)
      ref[i] = RngStream(9).substream("i", i).normal();
    EXPECT_EQ(out, ref);
  }
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 80) throw DataError("bad " + std::to_string(i));
    });
    FAIL() << "expected exception";
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "bad 17");
  }
}

TEST(Parallel, EffectiveWorkers) {
  EXPECT_EQ(effective_workers(0, 10), 1u);
  EXPECT_EQ(effective_workers(8, 3), 3u);
  EXPECT_EQ(effective_workers(2, 100), 2u);
}

TEST(Hash, FnvKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(to_hex(0xabcull), "0000000000000abc");
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code(ErrorKind::kData), 3);
  EXPECT_EQ(exit_code(ErrorKind::kNumerical), 4);
}

TEST(Fft, RoundTripAndParseval) {
  const std::size_t n = 64;
  RealFft1d fft(n);
  RngStream r(5);
  std::vector<double> x(n), back(n);
  for (double& v : x) v = r.normal();
  std::vector<std::complex<double>> spec(n / 2 + 1);
  fft.forward(x, spec);
  fft.inverse(spec, back);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i] / n, x[i], 1e-12);
  double sum = std::accumulate(x.begin(), x.end(), 0.0);
  EXPECT_NEAR(spec[0].real(), sum, 1e-10);
  EXPECT_EQ(next_pow2(1), 1u);
  EXPECT_EQ(next_pow2(5), 8u);
  EXPECT_EQ(next_pow2(64), 64u);
}

TEST(Fft, TwoDimensionalMatchesNaiveDft) {
  const std::size_t rows = 4, cols = 6;
  RngStream r(6);
  std::vector<double> x(rows * cols);
  for (double& v : x) v = r.normal();
  const auto f = real_fft2d(x, rows, cols);
  const std::size_t half = cols / 2 + 1;
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < half; ++v) {
      std::complex<double> acc = 0;
      for (std::size_t a = 0; a < rows; ++a)
        for (std::size_t b = 0; b < cols; ++b) {
          const double ang = -2 * M_PI * (double(u * a) / rows + double(v * b) / cols);
          acc += x[a * cols + b] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      EXPECT_NEAR(std::abs(f[u * half + v] - acc), 0.0, 1e-10);
    }
}

}  // namespace
}  // namespace ldsim
