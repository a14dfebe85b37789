#pragma once

// Seeded generators for the simulation experiments: caustic-like diffuser
// PSFs, lens-baseline PSFs, tiled Gaussian-passband filter arrays, point and
// bar-target scenes, additive Gaussian noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lhsi/core.hpp"
#include "lhsi/fft.hpp"

namespace lhsi {

struct FilterArraySpec {
  int grid_rows = 4;
  int grid_cols = 4;
  int filter_px = 1;
  double lambda_min_nm = 386.0;
  double lambda_max_nm = 898.0;
  double bandwidth_nm = 12.0;  // FWHM of each Gaussian passband
  double peak_transmittance = 1.0;
};

namespace detail {

// Deterministic across platforms: std::mt19937_64 is pinned by the standard,
// the uniform/normal draws below avoid implementation-defined distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Circular Gaussian blur via FFT; sigma in pixels, kernel uses wrapped
// distances so the result has no boundary roll-off.
inline void gaussian_blur_wrap(Image& im, double sigma) {
  const int ny = im.ny, nx = im.nx;
  const size_t n = static_cast<size_t>(ny) * nx;
  std::vector<std::complex<double>> f(n), k(n);
  for (size_t i = 0; i < n; ++i) f[i] = im.v[i];
  double ksum = 0.0;
  for (int y = 0; y < ny; ++y) {
    const int dy = std::min(y, ny - y);
    for (int x = 0; x < nx; ++x) {
      const int dx = std::min(x, nx - x);
      const double g =
          std::exp(-(static_cast<double>(dy) * dy + static_cast<double>(dx) * dx) /
                   (2.0 * sigma * sigma));
      k[static_cast<size_t>(y) * nx + x] = g;
      ksum += g;
    }
  }
  fft::forward2d(f, ny, nx);
  fft::forward2d(k, ny, nx);
  const double scale = 1.0 / (ksum * static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) f[i] *= k[i] * scale;
  fft::inverse2d(f, ny, nx);
  for (size_t i = 0; i < n; ++i) im.v[i] = f[i].real();
}

}  // namespace detail

// Pseudorandom caustic-like PSF: white noise, Gaussian low-pass at
// sigma = feature_px, exponential contrast stretch, floor at zero, unit sum.
inline Psf generate_diffuser_psf(uint64_t seed, int ny, int nx,
                                 double feature_px) {
  if (ny <= 0 || nx <= 0) throw ShapeError("generate_diffuser_psf: bad shape");
  if (!(feature_px >= 1.0))
    throw std::invalid_argument("generate_diffuser_psf: feature_px < 1");
  detail::Rng rng(seed);
  Image im(ny, nx);
  for (double& v : im.v) v = rng.gauss();
  detail::gaussian_blur_wrap(im, feature_px);
  for (double& v : im.v) v = std::exp(4.0 * v);
  const double mn = *std::min_element(im.v.begin(), im.v.end());
  for (double& v : im.v) v -= mn;
  Psf psf(std::move(im));
  psf.normalize();
  return psf;
}

enum class LensKind { high_na, low_na };

// high_na: single-pixel delta at the centered-crop alignment point.
// low_na: centered Gaussian with FWHM = superpixel_px, unit sum.
inline Psf generate_lens_psf(LensKind kind, int ny, int nx, int superpixel_px) {
  if (ny <= 0 || nx <= 0) throw ShapeError("generate_lens_psf: bad shape");
  if (superpixel_px < 1)
    throw std::invalid_argument("generate_lens_psf: superpixel_px < 1");
  Image im(ny, nx);
  const int cy = (ny - 1) / 2, cx = (nx - 1) / 2;
  if (kind == LensKind::high_na) {
    im.at(cy, cx) = 1.0;
    return Psf(std::move(im));
  }
  const double sigma = superpixel_px / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const double dy = y - cy, dx = x - cx;
      im.at(y, x) = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    }
  Psf psf(std::move(im));
  psf.normalize();
  return psf;
}

// Filter-pixel center wavelengths, uniformly spaced over the given range in
// raster order; a single filter sits at the midpoint.
inline std::vector<double> filter_center_wavelengths(const FilterArraySpec& s) {
  const int k = s.grid_rows * s.grid_cols;
  if (k < 1) throw ShapeError("filter_center_wavelengths: empty grid");
  if (!(s.lambda_min_nm < s.lambda_max_nm))
    throw std::invalid_argument("filter_center_wavelengths: bad lambda range");
  std::vector<double> c(k);
  if (k == 1) {
    c[0] = 0.5 * (s.lambda_min_nm + s.lambda_max_nm);
    return c;
  }
  const double d = (s.lambda_max_nm - s.lambda_min_nm) / (k - 1);
  for (int i = 0; i < k; ++i) c[i] = s.lambda_min_nm + i * d;
  return c;
}

// Tiled filter array response. Sensor pixel (y, x) belongs to filter pixel
// ((y / filter_px) % rows, (x / filter_px) % cols), raster-ordered within the
// super-pixel; transmittance of channel l is a Gaussian passband around that
// filter's center wavelength.
inline FilterFunction generate_filter_function(int sensor_ny, int sensor_nx,
                                               const FilterArraySpec& spec,
                                               const std::vector<double>& wavelengths_nm) {
  if (sensor_ny <= 0 || sensor_nx <= 0)
    throw ShapeError("generate_filter_function: bad sensor shape");
  if (spec.grid_rows < 1 || spec.grid_cols < 1 || spec.filter_px < 1)
    throw std::invalid_argument("generate_filter_function: bad grid");
  if (!(spec.bandwidth_nm > 0.0))
    throw std::invalid_argument("generate_filter_function: bandwidth <= 0");
  if (!(spec.peak_transmittance > 0.0 && spec.peak_transmittance <= 1.0))
    throw std::invalid_argument("generate_filter_function: peak not in (0, 1]");
  const int k = spec.grid_rows * spec.grid_cols;
  if (static_cast<int>(wavelengths_nm.size()) != k)
    throw ShapeError("generate_filter_function: wavelength count != grid size");

  const std::vector<double> centers = filter_center_wavelengths(spec);
  FilterFunction f(k, sensor_ny, sensor_nx);
  f.wavelengths_nm = wavelengths_nm;
  f.grid_rows = spec.grid_rows;
  f.grid_cols = spec.grid_cols;
  f.filter_px = spec.filter_px;
  const double c4ln2 = 4.0 * std::numbers::ln2;
  for (int y = 0; y < sensor_ny; ++y) {
    const int fy = (y / spec.filter_px) % spec.grid_rows;
    for (int x = 0; x < sensor_nx; ++x) {
      const int fx = (x / spec.filter_px) % spec.grid_cols;
      const double center = centers[fy * spec.grid_cols + fx];
      for (int l = 0; l < k; ++l) {
        const double d = wavelengths_nm[l] - center;
        f.at(l, y, x) = spec.peak_transmittance *
                        std::exp(-c4ln2 * d * d /
                                 (spec.bandwidth_nm * spec.bandwidth_nm));
      }
    }
  }
  return f;
}

struct ScenePoint {
  int x = 0;
  int y = 0;
  int channel = 0;
  double amplitude = 1.0;
};

inline HyperspectralCube make_point_scene(int nl, int ny, int nx,
                                          const std::vector<double>& wavelengths_nm,
                                          const std::vector<ScenePoint>& points) {
  if (static_cast<int>(wavelengths_nm.size()) != nl)
    throw ShapeError("make_point_scene: wavelength count mismatch");
  HyperspectralCube v(nl, ny, nx);
  v.wavelengths_nm = wavelengths_nm;
  for (const ScenePoint& p : points) {
    if (p.x < 0 || p.x >= nx || p.y < 0 || p.y >= ny || p.channel < 0 ||
        p.channel >= nl)
      throw ShapeError("make_point_scene: point out of bounds");
    if (!(p.amplitude > 0.0))
      throw std::invalid_argument("make_point_scene: amplitude <= 0");
    v.at(p.channel, p.y, p.x) += p.amplitude;
  }
  return v;
}

// Three-bar group: bars are vertical (resolution along x), width w, gap w,
// bar length 5w; (x, y) is the top-left corner. channel < 0 means broadband
// (same pattern in every channel).
struct BarGroup {
  int x = 0;
  int y = 0;
  int bar_width_px = 1;
  int channel = 0;
  double amplitude = 1.0;
};

inline HyperspectralCube make_resolution_target(int nl, int ny, int nx,
                                                const std::vector<double>& wavelengths_nm,
                                                const std::vector<BarGroup>& groups) {
  if (static_cast<int>(wavelengths_nm.size()) != nl)
    throw ShapeError("make_resolution_target: wavelength count mismatch");
  HyperspectralCube v(nl, ny, nx);
  v.wavelengths_nm = wavelengths_nm;
  std::vector<std::array<int, 4>> boxes;  // y0, y1, x0, x1 (exclusive)
  for (const BarGroup& g : groups) {
    const int w = g.bar_width_px;
    if (w < 1) throw std::invalid_argument("make_resolution_target: bar width < 1");
    if (!(g.amplitude > 0.0))
      throw std::invalid_argument("make_resolution_target: amplitude <= 0");
    if (g.channel >= nl)
      throw ShapeError("make_resolution_target: channel out of bounds");
    const int h = 5 * w;  // bar length, 5:1 aspect
    const int gw = 5 * w; // three bars + two gaps
    if (g.x < 0 || g.y < 0 || g.y + h > ny || g.x + gw > nx)
      throw ShapeError("make_resolution_target: group out of bounds");
    for (const auto& b : boxes)
      if (g.y < b[1] && g.y + h > b[0] && g.x < b[3] && g.x + gw > b[2])
        throw std::invalid_argument("make_resolution_target: groups overlap");
    boxes.push_back({g.y, g.y + h, g.x, g.x + gw});
    for (int bar = 0; bar < 3; ++bar) {
      const int x0 = g.x + 2 * bar * w;
      for (int y = g.y; y < g.y + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
          if (g.channel < 0)
            for (int l = 0; l < nl; ++l) v.at(l, y, x) += g.amplitude;
          else
            v.at(g.channel, y, x) += g.amplitude;
        }
    }
  }
  return v;
}

// Adds i.i.d. zero-mean Gaussian noise with the given variance. Negative
// results are kept.
inline Measurement add_gaussian_noise(const Measurement& b, double variance,
                                      uint64_t seed) {
  if (variance < 0.0)
    throw std::invalid_argument("add_gaussian_noise: negative variance");
  Measurement out = b;
  if (variance == 0.0) return out;
  detail::Rng rng(seed);
  const double s = std::sqrt(variance);
  for (double& v : out.v) v += s * rng.gauss();
  return out;
}

}  // namespace lhsi
