#pragma once

// Linear measurement operator: per-channel 2D linear convolution with the
// PSF, centered crop to the sensor window, pointwise filter mask, sum over
// channels. Adjoint and spectral-norm estimation included.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "lhsi/core.hpp"
#include "lhsi/fft.hpp"

namespace lhsi {

// Full (linear, not circular) 2D convolution via zero-padded FFT.
// Output size (a.ny + b.ny - 1, a.nx + b.nx - 1).
inline Image convolve2d_full(const Image& plane, const Psf& psf) {
  if (plane.ny <= 0 || plane.nx <= 0 || psf.ny() <= 0 || psf.nx() <= 0)
    throw ShapeError("convolve2d_full: empty operand");
  for (double x : plane.v)
    if (!std::isfinite(x)) throw NumericalError("convolve2d_full: non-finite plane");
  for (double x : psf.im.v)
    if (!std::isfinite(x)) throw NumericalError("convolve2d_full: non-finite psf");

  const long long fy = static_cast<long long>(plane.ny) + psf.ny() - 1;
  const long long fx = static_cast<long long>(plane.nx) + psf.nx() - 1;
  if (fy * fx > (1ll << 31)) throw ShapeError("convolve2d_full: output too large");
  const int full_ny = static_cast<int>(fy), full_nx = static_cast<int>(fx);
  const int py = fft::next_fast_size(full_ny), px = fft::next_fast_size(full_nx);
  const size_t n = static_cast<size_t>(py) * px;

  std::vector<std::complex<double>> fa(n), fb(n);
  for (int y = 0; y < plane.ny; ++y)
    for (int x = 0; x < plane.nx; ++x)
      fa[static_cast<size_t>(y) * px + x] = plane.at(y, x);
  for (int y = 0; y < psf.ny(); ++y)
    for (int x = 0; x < psf.nx(); ++x)
      fb[static_cast<size_t>(y) * px + x] = psf.im.at(y, x);

  fft::forward2d(fa, py, px);
  fft::forward2d(fb, py, px);
  const double scale = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) fa[i] *= fb[i] * scale;
  fft::inverse2d(fa, py, px);

  Image out(full_ny, full_nx);
  for (int y = 0; y < full_ny; ++y)
    for (int x = 0; x < full_nx; ++x)
      out.at(y, x) = fa[static_cast<size_t>(y) * px + x].real();
  return out;
}

// Centered window; odd size differences drop the extra row/col at the
// high-index side.
inline Image crop_center(const Image& full, int out_ny, int out_nx) {
  if (out_ny > full.ny || out_nx > full.nx)
    throw ShapeError("crop_center: output exceeds input");
  if (out_ny < 0 || out_nx < 0) throw ShapeError("crop_center: negative size");
  const int oy = (full.ny - out_ny) / 2;
  const int ox = (full.nx - out_nx) / 2;
  Image out(out_ny, out_nx);
  for (int y = 0; y < out_ny; ++y)
    for (int x = 0; x < out_nx; ++x)
      out.at(y, x) = full.at(y + oy, x + ox);
  return out;
}

// The full system operator A: cube -> measurement. Holds the PSF spectrum
// at padded size, the filter stack, and the crop geometry.
class SystemModel {
 public:
  SystemModel(Psf psf, FilterFunction filter, int scene_ny, int scene_nx)
      : psf_(std::move(psf)),
        filter_(std::move(filter)),
        scene_ny_(scene_ny),
        scene_nx_(scene_nx) {
    if (scene_ny_ <= 0 || scene_nx_ <= 0)
      throw ShapeError("SystemModel: scene shape must be positive");
    if (psf_.ny() <= 0 || psf_.nx() <= 0)
      throw ShapeError("SystemModel: empty psf");
    if (filter_.ny <= 0 || filter_.nx <= 0 || filter_.nl <= 0)
      throw ShapeError("SystemModel: empty filter");
    full_ny_ = scene_ny_ + psf_.ny() - 1;
    full_nx_ = scene_nx_ + psf_.nx() - 1;
    if (full_ny_ < filter_.ny || full_nx_ < filter_.nx)
      throw ShapeError("SystemModel: convolution output smaller than sensor");
    crop_oy_ = (full_ny_ - filter_.ny) / 2;
    crop_ox_ = (full_nx_ - filter_.nx) / 2;
    pad_ny_ = fft::next_fast_size(full_ny_);
    pad_nx_ = fft::next_fast_size(full_nx_);
    psf_spectrum_.assign(static_cast<size_t>(pad_ny_) * pad_nx_, {0.0, 0.0});
    for (int y = 0; y < psf_.ny(); ++y)
      for (int x = 0; x < psf_.nx(); ++x)
        psf_spectrum_[static_cast<size_t>(y) * pad_nx_ + x] = psf_.im.at(y, x);
    fft::forward2d(psf_spectrum_, pad_ny_, pad_nx_);
  }

  const Psf& psf() const { return psf_; }
  const FilterFunction& filter() const { return filter_; }
  int scene_ny() const { return scene_ny_; }
  int scene_nx() const { return scene_nx_; }
  int sensor_ny() const { return filter_.ny; }
  int sensor_nx() const { return filter_.nx; }
  int n_lambda() const { return filter_.nl; }

  // b = sum_l F_l .* crop(h * v_l)
  Measurement forward(const HyperspectralCube& v) const {
    if (v.nl != filter_.nl || v.ny != scene_ny_ || v.nx != scene_nx_)
      throw ShapeError("forward: cube shape mismatch");
    Measurement b(filter_.ny, filter_.nx);
    std::vector<std::complex<double>> buf(
        static_cast<size_t>(pad_ny_) * pad_nx_);
    const double scale = 1.0 / (static_cast<double>(pad_ny_) * pad_nx_);
    for (int l = 0; l < v.nl; ++l) {
      const double* plane = v.plane(l);
      bool any = false;
      for (size_t i = 0; i < v.plane_size() && !any; ++i) any = plane[i] != 0.0;
      if (!any) continue;
      std::fill(buf.begin(), buf.end(), std::complex<double>{});
      for (int y = 0; y < scene_ny_; ++y)
        for (int x = 0; x < scene_nx_; ++x)
          buf[static_cast<size_t>(y) * pad_nx_ + x] =
              plane[static_cast<size_t>(y) * scene_nx_ + x];
      fft::forward2d(buf, pad_ny_, pad_nx_);
      for (size_t i = 0; i < buf.size(); ++i) buf[i] *= psf_spectrum_[i] * scale;
      fft::inverse2d(buf, pad_ny_, pad_nx_);
      for (int y = 0; y < filter_.ny; ++y)
        for (int x = 0; x < filter_.nx; ++x)
          b.at(y, x) += filter_.at(l, y, x) *
                        buf[static_cast<size_t>(y + crop_oy_) * pad_nx_ +
                            (x + crop_ox_)]
                            .real();
    }
    return b;
  }

  // A^T b: per channel, embed the masked measurement at the crop offset and
  // correlate with the PSF (convolution with the 180-degree rotated PSF).
  HyperspectralCube adjoint(const Measurement& b) const {
    if (b.ny != filter_.ny || b.nx != filter_.nx)
      throw ShapeError("adjoint: measurement shape mismatch");
    HyperspectralCube v(filter_.nl, scene_ny_, scene_nx_);
    v.wavelengths_nm = filter_.wavelengths_nm;
    std::vector<std::complex<double>> buf(
        static_cast<size_t>(pad_ny_) * pad_nx_);
    const double scale = 1.0 / (static_cast<double>(pad_ny_) * pad_nx_);
    for (int l = 0; l < filter_.nl; ++l) {
      std::fill(buf.begin(), buf.end(), std::complex<double>{});
      bool any = false;
      for (int y = 0; y < filter_.ny; ++y)
        for (int x = 0; x < filter_.nx; ++x) {
          const double m = filter_.at(l, y, x) * b.at(y, x);
          if (m != 0.0) any = true;
          buf[static_cast<size_t>(y + crop_oy_) * pad_nx_ + (x + crop_ox_)] = m;
        }
      if (!any) continue;
      fft::forward2d(buf, pad_ny_, pad_nx_);
      for (size_t i = 0; i < buf.size(); ++i)
        buf[i] *= std::conj(psf_spectrum_[i]) * scale;
      fft::inverse2d(buf, pad_ny_, pad_nx_);
      double* plane = v.plane(l);
      for (int y = 0; y < scene_ny_; ++y)
        for (int x = 0; x < scene_nx_; ++x)
          plane[static_cast<size_t>(y) * scene_nx_ + x] =
              buf[static_cast<size_t>(y) * pad_nx_ + x].real();
    }
    return v;
  }

  // Largest eigenvalue of A^T A (squared spectral norm of A) by power
  // iteration. Deterministic: fixed internal seed for the start vector.
  double operator_norm(int max_iters = 100, double tol = 1e-6) const {
    if (max_iters < 1) throw std::invalid_argument("operator_norm: max_iters < 1");
    if (!(tol > 0.0)) throw std::invalid_argument("operator_norm: tol <= 0");
    HyperspectralCube x(filter_.nl, scene_ny_, scene_nx_);
    x.wavelengths_nm = filter_.wavelengths_nm;
    std::mt19937_64 eng(0x6f7074696373ull);
    for (double& e : x.data) e = (eng() >> 11) * 0x1.0p-53;
    double nrm = norm(x.data);
    if (nrm == 0.0) return 0.0;
    for (double& e : x.data) e /= nrm;
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      HyperspectralCube w = adjoint(forward(x));
      double est = 0.0;
      for (size_t i = 0; i < w.data.size(); ++i) est += x.data[i] * w.data[i];
      const double wn = norm(w.data);
      if (wn == 0.0) return 0.0;
      const bool done = it > 0 && std::abs(est - lambda) <
                                      tol * std::max(std::abs(est), 1e-300);
      lambda = est;
      if (done) break;
      for (size_t i = 0; i < w.data.size(); ++i) x.data[i] = w.data[i] / wn;
    }
    return lambda;
  }

 private:
  static double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }

  Psf psf_;
  FilterFunction filter_;
  int scene_ny_, scene_nx_;
  int full_ny_, full_nx_;
  int crop_oy_, crop_ox_;
  int pad_ny_, pad_nx_;
  std::vector<std::complex<double>> psf_spectrum_;
};

}  // namespace lhsi
