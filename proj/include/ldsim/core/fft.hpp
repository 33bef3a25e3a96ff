#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ldsim {

// Thin RAII wrapper over FFTW real-to-complex / complex-to-real transforms of a
// fixed size. Plan creation is serialized (the FFTW planner is not
// thread-safe); execution is safe from multiple threads on distinct buffers.
class RealFft1d {
 public:
  explicit RealFft1d(std::size_t n);
  ~RealFft1d();
  RealFft1d(const RealFft1d&) = delete;
  RealFft1d& operator=(const RealFft1d&) = delete;

  std::size_t size() const { return n_; }
  // in.size() == n, out.size() == n/2 + 1.
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;
  // Unnormalized inverse: result is n times the true inverse.
  void inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

// Unnormalized 2-D forward real FFT of a row-major rows x cols array.
// Output is rows x (cols/2 + 1), row-major.
std::vector<std::complex<double>> real_fft2d(std::span<const double> in,
                                             std::size_t rows,
                                             std::size_t cols);

std::size_t next_pow2(std::size_t n);

}  // namespace ldsim
