#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ldsim::projection {

// Row-major 2-D image.
struct Image2D {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Image2D() = default;
  Image2D(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}
  Image2D(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

// Parallel-beam geometry with angles k * pi / n_angles, k = 0..n_angles-1.
// Detector j sits at offset (j - (n_detectors - 1) / 2) * detector_spacing
// pixels from the rotation centre.
struct ProjectionGeometry {
  std::size_t n_angles = 0;
  std::size_t n_detectors = 0;
  double detector_spacing = 0.5;
  bool assume_in_circle = true;

  std::vector<double> angles() const;
  double detector_offset(std::size_t j) const;
  // Throws when the detector row cannot cover an image of the given side.
  void validate(std::size_t image_side) const;

  // n_angles = ceil(pi/2 * side) rounded up to a multiple of 4; n_detectors =
  // ceil(diagonal / spacing) rounded up to odd.
  static ProjectionGeometry for_image(std::size_t side,
                                      double detector_spacing = 0.5);
};

struct Sinogram {
  ProjectionGeometry geometry;
  std::vector<double> values;  // n_angles x n_detectors, row-major

  Sinogram() = default;
  explicit Sinogram(const ProjectionGeometry& g)
      : geometry(g), values(g.n_angles * g.n_detectors, 0.0) {}

  double& at(std::size_t angle, std::size_t det) {
    return values[angle * geometry.n_detectors + det];
  }
  double at(std::size_t angle, std::size_t det) const {
    return values[angle * geometry.n_detectors + det];
  }
  void validate() const;
};

// Line integrals by bilinear sampling along each ray with unit step, scaled by
// pixel_size. Requires a square image.
Sinogram radon(const Image2D& image, const ProjectionGeometry& geom,
               double pixel_size = 1.0, unsigned workers = 1);

struct RampOptions {
  bool cosine_window = false;
};

// Ram-Lak filtering of every detector row in the frequency domain after zero
// padding to the next power of two >= 2 * n_detectors.
Sinogram ramp_filter(const Sinogram& sino, const RampOptions& opt = {});

// Frequency response used by ramp_filter for a padded length, in units of the
// detector sampling rate. Index m covers the r2c half spectrum.
std::vector<double> ramp_response(std::size_t padded, bool cosine_window);

// Unfiltered back-projection with linear detector interpolation, scaled by
// pi / n_angles.
Image2D backproject(const Sinogram& filtered, std::size_t out_size,
                    unsigned workers = 1);

// ramp_filter + backproject, divided by pixel_size so that
// fbp(radon(f, px), px) approximates f.
Image2D fbp(const Sinogram& sino, std::size_t out_size,
            const RampOptions& opt = {}, double pixel_size = 1.0,
            unsigned workers = 1);

// Pads a rows x cols image to a centred square of side max(rows, cols).
Image2D pad_to_square(const Image2D& image, double fill);
// Inverse of pad_to_square.
Image2D crop_center(const Image2D& image, std::size_t rows, std::size_t cols);

// Whether pixel (r, c) of an n x n image lies inside the inscribed circle.
bool in_inscribed_circle(std::size_t n, std::size_t r, std::size_t c);

// Sinograms are stored as n_detectors x n_angles x 1 float32 MetaImages with a
// Sinogram = True header key.
void save_sinogram(const Sinogram& s, const std::filesystem::path& path);
Sinogram load_sinogram(const std::filesystem::path& path);

}  // namespace ldsim::projection
