#pragma once

// Regularizers and their proximal operators: weighted anisotropic 3D total
// variation, nuclear norm of the (pixels x channels) matricization,
// non-negativity projection.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "lhsi/core.hpp"

namespace lhsi {

struct TvWeights {
  double wx = 1.0;
  double wy = 1.0;
  double wl = 1.0;
};

// Sum over forward finite differences (last index of each axis omitted).
inline double tv3d_value(const HyperspectralCube& v, const TvWeights& w) {
  double s = 0.0;
  for (int l = 0; l < v.nl; ++l)
    for (int y = 0; y < v.ny; ++y)
      for (int x = 0; x < v.nx; ++x) {
        const double c = v.at(l, y, x);
        if (x + 1 < v.nx) s += w.wx * std::abs(v.at(l, y, x + 1) - c);
        if (y + 1 < v.ny) s += w.wy * std::abs(v.at(l, y + 1, x) - c);
        if (l + 1 < v.nl) s += w.wl * std::abs(v.at(l + 1, y, x) - c);
      }
  return s;
}

namespace detail {

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// One parallel-proximal component: pairs (i, i+1) starting at `shift` along
// one axis, soft-thresholded in the Haar-difference coordinate; unpaired
// entries pass through. Adds the component estimate into acc.
// stride: element stride along the axis; len: axis length; the outer loops
// run over the other two axes via the caller-provided line starts.
inline void accumulate_pair_component(const std::vector<double>& v,
                                      std::vector<double>& acc, size_t line0,
                                      size_t stride, int len, int shift,
                                      double thresh) {
  int i = 0;
  for (; i < shift && i < len; ++i) acc[line0 + i * stride] += v[line0 + i * stride];
  for (; i + 1 < len; i += 2) {
    const double p = v[line0 + i * stride];
    const double q = v[line0 + (i + 1) * stride];
    const double m = 0.5 * (p + q);
    const double t = soft((q - p) / std::numbers::sqrt2, thresh);
    const double half = t / std::numbers::sqrt2;
    acc[line0 + i * stride] += m - half;
    acc[line0 + (i + 1) * stride] += m + half;
  }
  for (; i < len; ++i) acc[line0 + i * stride] += v[line0 + i * stride];
}

}  // namespace detail

// Approximate prox of gamma * TV_w via the 6-component parallel-proximal
// (cycle spinning) scheme: two pairing shifts per axis, each component
// thresholded at 6*gamma*w_axis in the Haar coordinate, results averaged.
inline HyperspectralCube prox_tv3d(const HyperspectralCube& v,
                                   const TvWeights& w, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("prox_tv3d: negative gamma");
  if (gamma == 0.0) return v;
  HyperspectralCube out(v.nl, v.ny, v.nx);
  out.wavelengths_nm = v.wavelengths_nm;
  std::vector<double>& acc = out.data;

  const size_t sx = 1;
  const size_t sy = static_cast<size_t>(v.nx);
  const size_t sl = static_cast<size_t>(v.ny) * v.nx;

  for (int shift : {0, 1}) {
    // x axis
    for (int l = 0; l < v.nl; ++l)
      for (int y = 0; y < v.ny; ++y)
        detail::accumulate_pair_component(v.data, acc, l * sl + y * sy, sx,
                                          v.nx, shift, 6.0 * gamma * w.wx);
    // y axis
    for (int l = 0; l < v.nl; ++l)
      for (int x = 0; x < v.nx; ++x)
        detail::accumulate_pair_component(v.data, acc, l * sl + x, sy, v.ny,
                                          shift, 6.0 * gamma * w.wy);
    // lambda axis
    for (int y = 0; y < v.ny; ++y)
      for (int x = 0; x < v.nx; ++x)
        detail::accumulate_pair_component(v.data, acc, y * sy + x, sl, v.nl,
                                          shift, 6.0 * gamma * w.wl);
  }
  for (double& e : acc) e /= 6.0;
  return out;
}

namespace detail {

// (ny*nx) x nl matricization: spatial pixels as rows, channels as columns.
// The cube layout is channel-major, so each channel is one contiguous column.
inline Eigen::Map<const Eigen::MatrixXd> as_matrix(const HyperspectralCube& v) {
  return {v.data.data(), static_cast<Eigen::Index>(v.plane_size()),
          static_cast<Eigen::Index>(v.nl)};
}

}  // namespace detail

// Sum of singular values of the (pixels x channels) matricization.
inline double nuclear_value(const HyperspectralCube& v) {
  if (v.data.empty()) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(detail::as_matrix(v));
  return svd.singularValues().sum();
}

// Singular value soft-thresholding on the (pixels x channels) matricization.
inline HyperspectralCube prox_nuclear(const HyperspectralCube& v, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("prox_nuclear: negative gamma");
  if (gamma == 0.0 || v.data.empty()) return v;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(detail::as_matrix(v),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("prox_nuclear: SVD did not converge");
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - gamma, 0.0);
  Eigen::MatrixXd m = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  HyperspectralCube out(v.nl, v.ny, v.nx);
  out.wavelengths_nm = v.wavelengths_nm;
  Eigen::Map<Eigen::MatrixXd>(out.data.data(), m.rows(), m.cols()) = m;
  return out;
}

// Elementwise clamp to [0, inf).
inline HyperspectralCube project_nonneg(const HyperspectralCube& v) {
  HyperspectralCube out = v;
  for (double& e : out.data) e = std::max(e, 0.0);
  return out;
}

}  // namespace lhsi
