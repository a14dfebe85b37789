#pragma once

// FISTA for 1/2 ||b - Av||^2 + tau1 * TV_w(v) + tau2 * ||v||_* subject to
// v >= 0. Composite prox handled by sequential application per iteration:
// TV, then nuclear, then non-negativity (last, so the constraint holds
// exactly at every iterate).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lhsi/core.hpp"
#include "lhsi/operator.hpp"
#include "lhsi/priors.hpp"

namespace lhsi {

struct SolverConfig {
  double tau1 = 1e-3;
  double tau2 = 1e-3;
  TvWeights tv_weights;
  int max_iters = 500;
  std::optional<double> step;  // default 0.9 / operator_norm()
  double convergence_tol = 0.0;  // 0 disables early stopping
  int log_every = 1;
};

struct SolveDiagnostics {
  std::vector<double> objective_history;
  std::vector<double> data_fidelity_history;
  int iterations_run = 0;
  double final_step = 0.0;
};

inline double objective(const SystemModel& model, const Measurement& b,
                        const HyperspectralCube& v, const SolverConfig& cfg) {
  const Measurement av = model.forward(v);
  if (av.ny != b.ny || av.nx != b.nx)
    throw ShapeError("objective: measurement shape mismatch");
  double fid = 0.0;
  for (size_t i = 0; i < b.v.size(); ++i) {
    const double r = b.v[i] - av.v[i];
    fid += r * r;
  }
  double obj = 0.5 * fid;
  if (cfg.tau1 > 0.0) obj += cfg.tau1 * tv3d_value(v, cfg.tv_weights);
  if (cfg.tau2 > 0.0) obj += cfg.tau2 * nuclear_value(v);
  return obj;
}

inline std::pair<HyperspectralCube, SolveDiagnostics> fista_reconstruct(
    const SystemModel& model, const Measurement& b, const SolverConfig& cfg) {
  if (cfg.max_iters < 1)
    throw std::invalid_argument("fista_reconstruct: max_iters < 1");
  if (cfg.tau1 < 0.0 || cfg.tau2 < 0.0)
    throw std::invalid_argument("fista_reconstruct: negative tau");
  if (cfg.step && !(*cfg.step > 0.0))
    throw std::invalid_argument("fista_reconstruct: step <= 0");
  if (b.ny != model.sensor_ny() || b.nx != model.sensor_nx())
    throw ShapeError("fista_reconstruct: measurement shape mismatch");

  const double step = cfg.step ? *cfg.step : 0.9 / model.operator_norm();
  if (!(step > 0.0) || !std::isfinite(step))
    throw NumericalError("fista_reconstruct: degenerate step size");

  SolveDiagnostics diag;
  diag.final_step = step;

  HyperspectralCube v(model.n_lambda(), model.scene_ny(), model.scene_nx());
  v.wavelengths_nm = model.filter().wavelengths_nm;
  HyperspectralCube v_prev = v;
  HyperspectralCube y = v;
  double t = 1.0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const Measurement ay = model.forward(y);
    Measurement r(ay.ny, ay.nx);
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = ay.v[i] - b.v[i];
    HyperspectralCube g = model.adjoint(r);

    HyperspectralCube u = std::move(y);
    for (size_t i = 0; i < u.data.size(); ++i) u.data[i] -= step * g.data[i];
    if (cfg.tau1 > 0.0) u = prox_tv3d(u, cfg.tv_weights, cfg.tau1 * step);
    if (cfg.tau2 > 0.0) u = prox_nuclear(u, cfg.tau2 * step);
    for (double& e : u.data) e = std::max(e, 0.0);

    v_prev = std::move(v);
    v = std::move(u);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    y = v;
    for (size_t i = 0; i < y.data.size(); ++i)
      y.data[i] += beta * (y.data[i] - v_prev.data[i]);
    t = t_next;

    const Measurement av = model.forward(v);
    double fid = 0.0;
    for (size_t i = 0; i < b.v.size(); ++i) {
      const double d = b.v[i] - av.v[i];
      fid += d * d;
    }
    fid *= 0.5;
    double obj = fid;
    if (cfg.tau1 > 0.0) obj += cfg.tau1 * tv3d_value(v, cfg.tv_weights);
    if (cfg.tau2 > 0.0) obj += cfg.tau2 * nuclear_value(v);
    if (!std::isfinite(obj))
      throw NumericalError("fista_reconstruct: non-finite objective at iteration " +
                           std::to_string(k + 1));
    diag.data_fidelity_history.push_back(fid);
    diag.objective_history.push_back(obj);
    diag.iterations_run = k + 1;

    const int w = 5;
    if (cfg.convergence_tol > 0.0 && k >= w) {
      const double prev = diag.objective_history[k - w];
      const double rel = std::abs(prev - obj) / std::max(std::abs(prev), 1e-300);
      if (rel < cfg.convergence_tol) break;
    }
  }
  return {std::move(v), std::move(diag)};
}

}  // namespace lhsi
