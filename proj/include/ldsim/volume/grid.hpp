#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldsim::volume {

struct Dims {
  std::size_t nx = 1, ny = 1, nz = 1;
  std::size_t count() const { return nx * ny * nz; }
  bool operator==(const Dims&) const = default;
};

struct Spacing {
  double x = 1.0, y = 1.0, z = 1.0;
  double voxel_volume() const { return x * y * z; }
  bool operator==(const Spacing&) const = default;
};

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;
  bool operator==(const Point3&) const = default;
};

// Dense 3-D array, x fastest then y then z (slice-major).
template <class T>
struct Grid3 {
  Dims dims;
  Spacing spacing;
  std::vector<T> data;

  Grid3() = default;
  Grid3(Dims d, Spacing s, T fill = T{})
      : dims(d), spacing(s), data(d.count(), fill) {}
  Grid3(Dims d, Spacing s, std::vector<T> values)
      : dims(d), spacing(s), data(std::move(values)) {
    if (data.size() != dims.count())
      throw std::invalid_argument("Grid3: value count does not match dims");
  }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims.nx * (y + dims.ny * z);
  }
  T& operator()(std::size_t x, std::size_t y, std::size_t z) {
    return data[index(x, y, z)];
  }
  const T& operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data[index(x, y, z)];
  }
  bool contains(long x, long y, long z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < static_cast<long>(dims.nx) &&
           y < static_cast<long>(dims.ny) && z < static_cast<long>(dims.nz);
  }
};

using MaskGrid = Grid3<std::uint8_t>;
using ImageGrid = Grid3<double>;

}  // namespace ldsim::volume
