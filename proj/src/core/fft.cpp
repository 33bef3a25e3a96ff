#include "ldsim/core/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace ldsim {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// FFTW new-array execute requires the same alignment as at planning time;
// copy through fftw_malloc'd scratch buffers to sidestep that requirement.
struct Scratch {
  double* real = nullptr;
  fftw_complex* complex = nullptr;
  Scratch(std::size_t n_real, std::size_t n_complex) {
    real = fftw_alloc_real(n_real);
    complex = fftw_alloc_complex(n_complex);
  }
  ~Scratch() {
    fftw_free(real);
    fftw_free(complex);
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
};

}  // namespace

struct RealFft1d::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft1d::RealFft1d(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw std::invalid_argument("RealFft1d: size must be > 0");
  Scratch s(n, n / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), s.real,
                                         s.complex, FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), s.complex,
                                         s.real, FFTW_ESTIMATE);
}

RealFft1d::~RealFft1d() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
}

void RealFft1d::forward(std::span<const double> in,
                        std::span<std::complex<double>> out) const {
  Scratch s(n_, n_ / 2 + 1);
  std::copy(in.begin(), in.end(), s.real);
  fftw_execute_dft_r2c(plans_->forward, s.real, s.complex);
  std::memcpy(static_cast<void*>(out.data()), s.complex, sizeof(fftw_complex) * (n_ / 2 + 1));
}

void RealFft1d::inverse(std::span<const std::complex<double>> in,
                        std::span<double> out) const {
  Scratch s(n_, n_ / 2 + 1);
  std::memcpy(s.complex, in.data(), sizeof(fftw_complex) * (n_ / 2 + 1));
  fftw_execute_dft_c2r(plans_->inverse, s.complex, s.real);
  std::copy(s.real, s.real + n_, out.begin());
}

std::vector<std::complex<double>> real_fft2d(std::span<const double> in,
                                             std::size_t rows,
                                             std::size_t cols) {
  const std::size_t half = cols / 2 + 1;
  Scratch s(rows * cols, rows * half);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols),
                                s.real, s.complex, FFTW_ESTIMATE);
  }
  std::copy(in.begin(), in.end(), s.real);
  fftw_execute(plan);
  std::vector<std::complex<double>> out(rows * half);
  std::memcpy(static_cast<void*>(out.data()), s.complex, sizeof(fftw_complex) * rows * half);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ldsim
