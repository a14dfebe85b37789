#pragma once

// Core data types: 2D images, point spread functions, hyperspectral cubes,
// and the spectral filter array response.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lhsi {

// Dimension mismatch between operands (cube vs. filter, psf vs. scene, ...).
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file or config: bad magic, truncated payload, invalid field.
class FormatError : public std::runtime_error {
 public:
  enum class Code { bad_magic, truncated, bad_payload, io, config };

  FormatError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

// Non-finite values or a numerically unusable operator.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Row-major 2D array of doubles.
struct Image {
  int ny = 0;
  int nx = 0;
  std::vector<double> v;

  Image() = default;
  Image(int ny_, int nx_, double fill = 0.0)
      : ny(ny_), nx(nx_), v(static_cast<size_t>(ny_) * nx_, fill) {
    if (ny_ < 0 || nx_ < 0) throw ShapeError("image dims must be nonnegative");
  }

  size_t size() const { return v.size(); }
  double& at(int y, int x) { return v[static_cast<size_t>(y) * nx + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * nx + x]; }
};

// A sensor measurement is just an image.
using Measurement = Image;

// Point spread function. Nonnegative, sums to 1 after normalize().
struct Psf {
  Image im;

  Psf() = default;
  explicit Psf(Image im_) : im(std::move(im_)) {}

  int ny() const { return im.ny; }
  int nx() const { return im.nx; }

  // Scales to unit sum. Throws if the sum is not positive and finite.
  void normalize() {
    double s = 0.0;
    for (double x : im.v) {
      if (!std::isfinite(x)) throw NumericalError("psf has non-finite values");
      s += x;
    }
    if (!(s > 0.0) || !std::isfinite(s))
      throw NumericalError("psf sum must be positive");
    for (double& x : im.v) x /= s;
  }
};

// Spectral datacube, indexed [channel][y][x], stored row-major per channel.
struct HyperspectralCube {
  int nl = 0;  // spectral channels
  int ny = 0;
  int nx = 0;
  std::vector<double> wavelengths_nm;  // size nl, ascending
  std::vector<double> data;            // size nl*ny*nx

  HyperspectralCube() = default;
  HyperspectralCube(int nl_, int ny_, int nx_, double fill = 0.0)
      : nl(nl_),
        ny(ny_),
        nx(nx_),
        wavelengths_nm(static_cast<size_t>(nl_), 0.0),
        data(static_cast<size_t>(nl_) * ny_ * nx_, fill) {
    if (nl_ < 0 || ny_ < 0 || nx_ < 0)
      throw ShapeError("cube dims must be nonnegative");
  }

  size_t idx(int l, int y, int x) const {
    return (static_cast<size_t>(l) * ny + y) * nx + x;
  }
  double& at(int l, int y, int x) { return data[idx(l, y, x)]; }
  double at(int l, int y, int x) const { return data[idx(l, y, x)]; }

  size_t plane_size() const { return static_cast<size_t>(ny) * nx; }
  double* plane(int l) { return data.data() + plane_size() * l; }
  const double* plane(int l) const { return data.data() + plane_size() * l; }
};

// Per-pixel spectral response of the filter array, values in [0, 1].
// Same indexing as a cube: [channel][y][x] over the sensor grid.
struct FilterFunction {
  int nl = 0;
  int ny = 0;
  int nx = 0;
  std::vector<double> wavelengths_nm;
  std::vector<double> data;

  // Tile geometry: the array repeats a grid_rows x grid_cols pattern of
  // filter pixels, each filter_px x filter_px sensor pixels.
  int grid_rows = 0;
  int grid_cols = 0;
  int filter_px = 1;

  FilterFunction() = default;
  FilterFunction(int nl_, int ny_, int nx_)
      : nl(nl_),
        ny(ny_),
        nx(nx_),
        wavelengths_nm(static_cast<size_t>(nl_), 0.0),
        data(static_cast<size_t>(nl_) * ny_ * nx_, 0.0) {
    if (nl_ < 0 || ny_ < 0 || nx_ < 0)
      throw ShapeError("filter dims must be nonnegative");
  }

  size_t idx(int l, int y, int x) const {
    return (static_cast<size_t>(l) * ny + y) * nx + x;
  }
  double& at(int l, int y, int x) { return data[idx(l, y, x)]; }
  double at(int l, int y, int x) const { return data[idx(l, y, x)]; }

  // Edge length of one super-pixel (full tile period) in sensor pixels.
  std::pair<int, int> superpixel() const {
    return {grid_rows * filter_px, grid_cols * filter_px};
  }
};

}  // namespace lhsi
