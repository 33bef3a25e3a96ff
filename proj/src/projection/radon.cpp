#include "ldsim/projection/radon.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ldsim/core/error.hpp"
#include "ldsim/core/fft.hpp"
#include "ldsim/core/parallel.hpp"
#include "ldsim/volume/metaimage.hpp"

namespace ldsim::projection {
namespace {

constexpr double kPi = std::numbers::pi;

double bilinear(const Image2D& img, double r, double c) {
  const double fr = std::floor(r), fc = std::floor(c);
  const long r0 = static_cast<long>(fr), c0 = static_cast<long>(fc);
  const double ar = r - fr, ac = c - fc;
  const long nr = static_cast<long>(img.rows), nc = static_cast<long>(img.cols);
  auto px = [&](long rr, long cc) {
    return (rr < 0 || cc < 0 || rr >= nr || cc >= nc)
               ? 0.0
               : img.data[static_cast<std::size_t>(rr * nc + cc)];
  };
  return (1 - ar) * ((1 - ac) * px(r0, c0) + ac * px(r0, c0 + 1)) +
         ar * ((1 - ac) * px(r0 + 1, c0) + ac * px(r0 + 1, c0 + 1));
}

// Integer t range for which base + t * dir stays within [lo, hi] on one axis.
void clip_slab(double base, double dir, double lo, double hi, double& tmin,
               double& tmax) {
  if (std::abs(dir) < 1e-12) {
    if (base < lo || base > hi) {
      tmin = 1;
      tmax = 0;
    }
    return;
  }
  double a = (lo - base) / dir, b = (hi - base) / dir;
  if (a > b) std::swap(a, b);
  tmin = std::max(tmin, a);
  tmax = std::min(tmax, b);
}

}  // namespace

Image2D::Image2D(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols)
    throw DataError("Image2D: value count does not match shape");
}

std::vector<double> ProjectionGeometry::angles() const {
  std::vector<double> a(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k)
    a[k] = kPi * static_cast<double>(k) / static_cast<double>(n_angles);
  return a;
}

double ProjectionGeometry::detector_offset(std::size_t j) const {
  return (static_cast<double>(j) - 0.5 * (static_cast<double>(n_detectors) - 1)) *
         detector_spacing;
}

void ProjectionGeometry::validate(std::size_t side) const {
  if (n_angles < 1) throw ConfigError("geometry: n_angles must be >= 1");
  if (n_detectors < 2) throw ConfigError("geometry: n_detectors must be >= 2");
  if (!(detector_spacing > 0))
    throw ConfigError("geometry: detector_spacing must be > 0");
  const double width = static_cast<double>(n_detectors) * detector_spacing;
  const double needed = assume_in_circle
                            ? static_cast<double>(side)
                            : std::sqrt(2.0) * static_cast<double>(side);
  if (width + 1e-9 < needed)
    throw ConfigError("geometry: detector row does not cover the image support");
}

ProjectionGeometry ProjectionGeometry::for_image(std::size_t side,
                                                 double spacing) {
  if (side == 0 || !(spacing > 0))
    throw ConfigError("geometry: invalid image side or spacing");
  ProjectionGeometry g;
  std::size_t na =
      static_cast<std::size_t>(std::ceil(kPi / 2.0 * static_cast<double>(side)));
  na = (na + 3) / 4 * 4;
  g.n_angles = na;
  std::size_t nd = static_cast<std::size_t>(
      std::ceil(std::sqrt(2.0) * static_cast<double>(side) / spacing));
  if (nd % 2 == 0) ++nd;
  g.n_detectors = nd;
  g.detector_spacing = spacing;
  g.assume_in_circle = false;
  return g;
}

void Sinogram::validate() const {
  if (values.size() != geometry.n_angles * geometry.n_detectors)
    throw DataError("sinogram: shape does not match geometry");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("sinogram: non-finite value");
}

Sinogram radon(const Image2D& image, const ProjectionGeometry& geom,
               double pixel_size, unsigned workers) {
  if (image.rows != image.cols)
    throw DataError("radon: image must be square (pad first)");
  if (image.rows == 0) throw DataError("radon: empty image");
  geom.validate(image.rows);
  for (double v : image.data)
    if (!std::isfinite(v)) throw DataError("radon: non-finite pixel");
  const std::size_t n = image.rows;
  const double c0 = 0.5 * (static_cast<double>(n) - 1.0);
  const long half = static_cast<long>(std::ceil(std::sqrt(2.0) * n / 2.0)) + 1;
  const auto theta = geom.angles();
  Sinogram out(geom);
  parallel_for(geom.n_angles, workers, [&](std::size_t a) {
    const double cs = std::cos(theta[a]), sn = std::sin(theta[a]);
    for (std::size_t j = 0; j < geom.n_detectors; ++j) {
      const double s = geom.detector_offset(j);
      // Point at parameter t: (row, col) = (c0 + s sn + t cs, c0 + s cs - t sn).
      const double br = c0 + s * sn, bc = c0 + s * cs;
      double tmin = -static_cast<double>(half), tmax = static_cast<double>(half);
      clip_slab(br, cs, -1.0, static_cast<double>(n), tmin, tmax);
      clip_slab(bc, -sn, -1.0, static_cast<double>(n), tmin, tmax);
      double acc = 0.0;
      for (long t = static_cast<long>(std::ceil(tmin));
           t <= static_cast<long>(std::floor(tmax)); ++t)
        acc += bilinear(image, br + t * cs, bc - t * sn);
      out.at(a, j) = acc * pixel_size;
    }
  });
  return out;
}

std::vector<double> ramp_response(std::size_t padded, bool cosine_window) {
  std::vector<double> h(padded / 2 + 1);
  for (std::size_t m = 0; m < h.size(); ++m) {
    const double f = static_cast<double>(m) / static_cast<double>(padded);
    h[m] = f;
    if (cosine_window) h[m] *= std::cos(kPi * f);
  }
  return h;
}

Sinogram ramp_filter(const Sinogram& sino, const RampOptions& opt) {
  const ProjectionGeometry& g = sino.geometry;
  if (g.n_detectors < 2) throw ConfigError("ramp_filter: n_detectors < 2");
  if (sino.values.size() != g.n_angles * g.n_detectors)
    throw DataError("ramp_filter: shape does not match geometry");
  const std::size_t padded = next_pow2(2 * g.n_detectors);
  const RealFft1d fft(padded);
  const auto h = ramp_response(padded, opt.cosine_window);
  // Inverse is unnormalized; fold 1/padded and 1/tau into the response.
  const double scale = 1.0 / (static_cast<double>(padded) * g.detector_spacing);
  Sinogram out(g);
  std::vector<double> row(padded);
  std::vector<std::complex<double>> spec(padded / 2 + 1);
  for (std::size_t a = 0; a < g.n_angles; ++a) {
    std::fill(row.begin(), row.end(), 0.0);
    std::copy_n(sino.values.begin() + static_cast<long>(a * g.n_detectors),
                g.n_detectors, row.begin());
    fft.forward(row, spec);
    for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= h[m] * scale;
    fft.inverse(spec, row);
    std::copy_n(row.begin(), g.n_detectors,
                out.values.begin() + static_cast<long>(a * g.n_detectors));
  }
  return out;
}

Image2D backproject(const Sinogram& filtered, std::size_t out_size,
                    unsigned workers) {
  const ProjectionGeometry& g = filtered.geometry;
  if (out_size == 0) throw ConfigError("backproject: out_size must be > 0");
  g.validate(out_size);
  if (filtered.values.size() != g.n_angles * g.n_detectors)
    throw DataError("backproject: shape does not match geometry");
  const auto theta = g.angles();
  std::vector<double> cs(g.n_angles), sn(g.n_angles);
  for (std::size_t a = 0; a < g.n_angles; ++a) {
    cs[a] = std::cos(theta[a]);
    sn[a] = std::sin(theta[a]);
  }
  const double c0 = 0.5 * (static_cast<double>(out_size) - 1.0);
  const double mid = 0.5 * (static_cast<double>(g.n_detectors) - 1.0);
  const double inv_tau = 1.0 / g.detector_spacing;
  const long last = static_cast<long>(g.n_detectors) - 1;
  const double scale = kPi / static_cast<double>(g.n_angles);
  Image2D out(out_size, out_size);
  parallel_for(out_size, workers, [&](std::size_t r) {
    const double y = static_cast<double>(r) - c0;
    for (std::size_t c = 0; c < out_size; ++c) {
      if (g.assume_in_circle && !in_inscribed_circle(out_size, r, c)) continue;
      const double x = static_cast<double>(c) - c0;
      double acc = 0.0;
      for (std::size_t a = 0; a < g.n_angles; ++a) {
        const double u = (x * cs[a] + y * sn[a]) * inv_tau + mid;
        const double fu = std::floor(u);
        const long j = static_cast<long>(fu);
        if (j < 0 || j > last) continue;
        const double w = u - fu;
        const double* row = &filtered.values[a * g.n_detectors];
        acc += j < last ? (1.0 - w) * row[j] + w * row[j + 1] : row[j];
      }
      out(r, c) = acc * scale;
    }
  });
  return out;
}

Image2D fbp(const Sinogram& sino, std::size_t out_size, const RampOptions& opt,
            double pixel_size, unsigned workers) {
  if (!(pixel_size > 0)) throw ConfigError("fbp: pixel_size must be > 0");
  sino.validate();
  Image2D img = backproject(ramp_filter(sino, opt), out_size, workers);
  if (pixel_size != 1.0)
    for (double& v : img.data) v /= pixel_size;
  return img;
}

Image2D pad_to_square(const Image2D& image, double fill) {
  const std::size_t n = std::max(image.rows, image.cols);
  if (image.rows == n && image.cols == n) return image;
  Image2D out(n, n, fill);
  const std::size_t r0 = (n - image.rows) / 2, c0 = (n - image.cols) / 2;
  for (std::size_t r = 0; r < image.rows; ++r)
    for (std::size_t c = 0; c < image.cols; ++c)
      out(r0 + r, c0 + c) = image(r, c);
  return out;
}

Image2D crop_center(const Image2D& image, std::size_t rows, std::size_t cols) {
  if (rows > image.rows || cols > image.cols)
    throw DataError("crop_center: crop larger than image");
  Image2D out(rows, cols);
  const std::size_t r0 = (image.rows - rows) / 2, c0 = (image.cols - cols) / 2;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = image(r0 + r, c0 + c);
  return out;
}

bool in_inscribed_circle(std::size_t n, std::size_t r, std::size_t c) {
  const double c0 = 0.5 * (static_cast<double>(n) - 1.0);
  const double dy = static_cast<double>(r) - c0, dx = static_cast<double>(c) - c0;
  const double rad = 0.5 * static_cast<double>(n);
  return dx * dx + dy * dy <= rad * rad;
}

void save_sinogram(const Sinogram& s, const std::filesystem::path& path) {
  s.validate();
  volume::MetaImage mi;
  mi.dims = {s.geometry.n_detectors, s.geometry.n_angles, 1};
  mi.spacing = {s.geometry.detector_spacing,
                kPi / static_cast<double>(s.geometry.n_angles), 1.0};
  mi.element_type = volume::ElementType::kFloat32;
  mi.extra["Sinogram"] = "True";
  mi.extra["AssumeInCircle"] = s.geometry.assume_in_circle ? "True" : "False";
  mi.values.assign(s.values.begin(), s.values.end());
  volume::write_metaimage(path, mi);
}

Sinogram load_sinogram(const std::filesystem::path& path) {
  const volume::MetaImage mi = volume::read_metaimage(path);
  const auto it = mi.extra.find("Sinogram");
  if (it == mi.extra.end() || it->second != "True")
    throw DataError("load_sinogram: file is not tagged as a sinogram");
  if (mi.dims.nz != 1) throw DataError("load_sinogram: expected nz = 1");
  ProjectionGeometry g;
  g.n_detectors = mi.dims.nx;
  g.n_angles = mi.dims.ny;
  g.detector_spacing = mi.spacing.x;
  const auto ic = mi.extra.find("AssumeInCircle");
  g.assume_in_circle = ic != mi.extra.end() && ic->second == "True";
  Sinogram s(g);
  s.values.assign(mi.values.begin(), mi.values.end());
  return s;
}

}  // namespace ldsim::projection
