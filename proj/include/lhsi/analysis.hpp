#pragma once

// Resolution and conditioning analyses: PSF autocorrelation half-width,
// Rayleigh two-point tests through the full reconstruction pipeline, local
// condition numbers of the sensing operator on hypothesized supports.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "lhsi/core.hpp"
#include "lhsi/fft.hpp"
#include "lhsi/operator.hpp"
#include "lhsi/simkit.hpp"
#include "lhsi/solver.hpp"

namespace lhsi {

struct CondSweepRow {
  int num_points = 0;
  double separation_px = 0.0;
  double separation_superpx = 0.0;
  double condition_number = 0.0;  // +inf when rank-deficient, NaN when skipped
};

// Half-width (pixels) of the PSF autocorrelation peak at 70% of maximum,
// measured on a horizontal profile through the peak with linear
// interpolation. The PSF is mean-subtracted first to remove the DC pedestal.
inline double autocorr_resolution(const Psf& psf) {
  const int ny = psf.ny(), nx = psf.nx();
  if (ny <= 0 || nx <= 0) throw ShapeError("autocorr_resolution: empty psf");
  const int py = fft::next_fast_size(2 * ny - 1);
  const int px = fft::next_fast_size(2 * nx - 1);
  const size_t n = static_cast<size_t>(py) * px;
  double mean = 0.0;
  for (double v : psf.im.v) mean += v;
  mean /= static_cast<double>(psf.im.v.size());
  std::vector<std::complex<double>> buf(n);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      buf[static_cast<size_t>(y) * px + x] = psf.im.at(y, x) - mean;
  fft::forward2d(buf, py, px);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& c : buf) c = std::norm(c) * scale;
  fft::inverse2d(buf, py, px);

  // Row 0 holds lags (0, dx); the peak is at lag (0, 0).
  const double peak = buf[0].real();
  if (!(peak > 0.0))
    throw NumericalError("autocorr_resolution: flat psf, no autocorrelation peak");
  const double level = 0.7 * peak;
  double prev = peak;
  for (int i = 1; i < nx; ++i) {
    const double cur = buf[static_cast<size_t>(i)].real();
    if (cur <= level) {
      return (i - 1) + (prev - level) / (prev - cur);
    }
    prev = cur;
  }
  throw NumericalError("autocorr_resolution: profile never falls to 70%");
}

namespace detail {

inline bool is_local_max(const std::vector<double>& p, int i) {
  const int n = static_cast<int>(p.size());
  const double l = i > 0 ? p[i - 1] : -std::numeric_limits<double>::infinity();
  const double r = i + 1 < n ? p[i + 1] : -std::numeric_limits<double>::infinity();
  return p[i] > 0.0 && p[i] >= l && p[i] >= r && (p[i] > l || p[i] > r);
}

// Rayleigh dip test on a 1D profile: peaks near the two expected positions
// and a dip between them at or below `dip_ratio` of the mean peak height.
inline bool peaks_resolved(const std::vector<double>& profile, int x1, int x2,
                           double dip_ratio) {
  const int n = static_cast<int>(profile.size());
  auto find_peak = [&](int target) -> int {
    int best = -1;
    for (int i = std::max(0, target - 1); i <= std::min(n - 1, target + 1); ++i)
      if (is_local_max(profile, i) && (best < 0 || profile[i] > profile[best]))
        best = i;
    return best;
  };
  const int p1 = find_peak(x1);
  const int p2 = find_peak(x2);
  if (p1 < 0 || p2 < 0 || p1 >= p2) return false;
  double dip = std::numeric_limits<double>::infinity();
  for (int i = p1 + 1; i < p2; ++i) dip = std::min(dip, profile[i]);
  return dip <= dip_ratio * 0.5 * (profile[p1] + profile[p2]);
}

}  // namespace detail

inline constexpr double kRayleighDipRatio = 0.735;

// Smallest separation (pixels) at which two equal point sources in the given
// channel reconstruct as Rayleigh-resolved peaks; nullopt if none of the
// tried separations resolves. Separations are tried in the given (ascending)
// order; each builds the scene, simulates a noisy measurement (normalized to
// unit peak before noise so noise_var is relative to full scale), and runs
// the full reconstruction.
inline std::optional<double> two_point_test(const SystemModel& model,
                                            const SolverConfig& cfg, int channel,
                                            const std::vector<double>& separations_px,
                                            double noise_var, uint64_t seed) {
  if (channel < 0 || channel >= model.n_lambda())
    throw ShapeError("two_point_test: channel out of bounds");
  const int ny = model.scene_ny(), nx = model.scene_nx();
  const int y0 = ny / 2, xc = nx / 2;
  for (double sep : separations_px) {
    if (sep < 0.0) throw std::invalid_argument("two_point_test: negative separation");
    const int d = static_cast<int>(std::lround(sep));
    const int x1 = xc - (d + 1) / 2;
    const int x2 = x1 + d;
    if (x1 < 0 || x2 >= nx) throw ShapeError("two_point_test: separation exceeds scene");
    HyperspectralCube scene = make_point_scene(
        model.n_lambda(), ny, nx, model.filter().wavelengths_nm,
        {{x1, y0, channel, 1.0}, {x2, y0, channel, 1.0}});
    Measurement b = model.forward(scene);
    double mx = 0.0;
    for (double v : b.v) mx = std::max(mx, v);
    if (mx > 0.0)
      for (double& v : b.v) v /= mx;
    b = add_gaussian_noise(b, noise_var, seed);
    auto [recon, diag] = fista_reconstruct(model, b, cfg);
    std::vector<double> profile(static_cast<size_t>(nx));
    for (int x = 0; x < nx; ++x) profile[x] = recon.at(channel, y0, x);
    if (d >= 1 && detail::peaks_resolved(profile, x1, x2, kRayleighDipRatio))
      return sep;
  }
  return std::nullopt;
}

// Three-bar variant of the Rayleigh test: all three bar peaks present and
// both gaps dip below the ratio.
inline bool three_bar_resolved(const std::vector<double>& profile, int c1,
                               int c2, int c3, double dip_ratio) {
  return detail::peaks_resolved(profile, c1, c2, dip_ratio) &&
         detail::peaks_resolved(profile, c2, c3, dip_ratio);
}

// Peak signal-to-noise ratio of a reconstruction against the ground truth,
// peak taken from the truth.
inline double psnr_db(const HyperspectralCube& truth,
                      const HyperspectralCube& recon) {
  if (truth.nl != recon.nl || truth.ny != recon.ny || truth.nx != recon.nx)
    throw ShapeError("psnr_db: shape mismatch");
  double peak = 0.0, mse = 0.0;
  for (size_t i = 0; i < truth.data.size(); ++i) {
    peak = std::max(peak, truth.data[i]);
    const double d = truth.data[i] - recon.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(truth.data.size());
  if (!(peak > 0.0)) throw NumericalError("psnr_db: empty ground truth");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

struct SupportVoxel {
  int x = 0;
  int y = 0;
  int channel = 0;
};

// sigma_max / sigma_min of the sub-matrix of A restricted to the given
// support voxels (columns are flattened forward images of unit impulses).
inline double local_condition_number(const SystemModel& model,
                                     const std::vector<SupportVoxel>& support) {
  if (support.empty())
    throw std::invalid_argument("local_condition_number: empty support");
  for (size_t i = 0; i < support.size(); ++i) {
    const auto& s = support[i];
    if (s.x < 0 || s.x >= model.scene_nx() || s.y < 0 || s.y >= model.scene_ny() ||
        s.channel < 0 || s.channel >= model.n_lambda())
      throw ShapeError("local_condition_number: voxel out of bounds");
    for (size_t j = 0; j < i; ++j)
      if (support[j].x == s.x && support[j].y == s.y &&
          support[j].channel == s.channel)
        throw std::invalid_argument("local_condition_number: duplicate voxel");
  }
  const int m = model.sensor_ny() * model.sensor_nx();
  // A column whose norm sits at the FFT noise floor is a structural zero:
  // the impulse input has unit norm, so column norms carry an absolute scale,
  // and roundoff from the padded transforms is orders of magnitude below
  // this. Without the cutoff a support of invisible voxels (e.g. behind a
  // fully opaque filter) would be judged by its noise, not its signal.
  constexpr double kNumericallyZeroColumn = 1e-12;
  Eigen::MatrixXd cols(m, static_cast<Eigen::Index>(support.size()));
  HyperspectralCube impulse(model.n_lambda(), model.scene_ny(), model.scene_nx());
  impulse.wavelengths_nm = model.filter().wavelengths_nm;
  for (size_t i = 0; i < support.size(); ++i) {
    const auto& s = support[i];
    impulse.at(s.channel, s.y, s.x) = 1.0;
    const Measurement col = model.forward(impulse);
    impulse.at(s.channel, s.y, s.x) = 0.0;
    for (int j = 0; j < m; ++j) cols(j, static_cast<Eigen::Index>(i)) = col.v[j];
    if (cols.col(static_cast<Eigen::Index>(i)).norm() <= kNumericallyZeroColumn)
      return std::numeric_limits<double>::infinity();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cols);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin <= 1e-12 * smax || smax == 0.0)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

enum class SweepMode { spatial_2d, spectral_3d };

// Condition numbers over centered point lattices: m x m squares in the middle
// channel (2D) or m x m x m cubes across adjacent channels (3D), for every
// m with m^2 (resp. m^3) <= max_points, at each separation. Lattices that do
// not fit the scene (or the channel range, in 3D) produce a NaN-marked row.
inline std::vector<CondSweepRow> condition_sweep(const SystemModel& model,
                                                 int max_points,
                                                 const std::vector<double>& separations_px,
                                                 SweepMode mode) {
  if (max_points < 1)
    throw std::invalid_argument("condition_sweep: max_points < 1");
  const int sp_edge = model.filter().superpixel().first;
  const double superpx = sp_edge > 0 ? static_cast<double>(sp_edge) : 1.0;
  const double cy = 0.5 * (model.scene_ny() - 1);
  const double cx = 0.5 * (model.scene_nx() - 1);
  const int mid = model.n_lambda() / 2;

  std::vector<CondSweepRow> rows;
  for (int m = 1;; ++m) {
    const int n = mode == SweepMode::spatial_2d ? m * m : m * m * m;
    if (n > max_points) break;
    const int depth = mode == SweepMode::spatial_2d ? 1 : m;
    for (double d : separations_px) {
      if (!(d >= 1.0))
        throw std::invalid_argument("condition_sweep: separation < 1 px");
      CondSweepRow row{n, d, d / superpx, 0.0};
      std::vector<SupportVoxel> support;
      bool fits = true;
      const int ch0 = mid - (depth - 1) / 2;
      for (int k = 0; k < depth && fits; ++k) {
        const int ch = ch0 + k;
        if (ch < 0 || ch >= model.n_lambda()) { fits = false; break; }
        for (int i = 0; i < m && fits; ++i)
          for (int j = 0; j < m && fits; ++j) {
            const int y = static_cast<int>(std::lround(cy + (i - 0.5 * (m - 1)) * d));
            const int x = static_cast<int>(std::lround(cx + (j - 0.5 * (m - 1)) * d));
            if (y < 0 || y >= model.scene_ny() || x < 0 || x >= model.scene_nx())
              fits = false;
            else
              support.push_back({x, y, ch});
          }
      }
      if (!fits) {
        row.condition_number = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.condition_number = local_condition_number(model, support);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// |argmax-channel wavelength - true wavelength| of the spectrum at the
// brightest voxel within a 3-px window around the expected position.
inline double spectral_peak_error(const HyperspectralCube& recon, int x, int y,
                                  double true_lambda_nm) {
  if (x < 0 || x >= recon.nx || y < 0 || y >= recon.ny)
    throw ShapeError("spectral_peak_error: point out of bounds");
  int by = -1, bx = -1;
  double best = 0.0;
  for (int yy = std::max(0, y - 3); yy <= std::min(recon.ny - 1, y + 3); ++yy)
    for (int xx = std::max(0, x - 3); xx <= std::min(recon.nx - 1, x + 3); ++xx) {
      double s = 0.0;
      for (int l = 0; l < recon.nl; ++l) s += recon.at(l, yy, xx);
      if (s > best) { best = s; by = yy; bx = xx; }
    }
  if (by < 0)
    throw NumericalError("spectral_peak_error: window is identically zero");
  int lbest = 0;
  for (int l = 1; l < recon.nl; ++l)
    if (recon.at(l, by, bx) > recon.at(lbest, by, bx)) lbest = l;
  return std::abs(recon.wavelengths_nm[lbest] - true_lambda_nm);
}

}  // namespace lhsi
