#pragma once

// JSON run configuration. Unknown keys are rejected; missing keys take the
// defaults below. See README for the schema.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lhsi/core.hpp"
#include "lhsi/simkit.hpp"
#include "lhsi/solver.hpp"

namespace lhsi {

struct PsfParams {
  std::string kind = "diffuser";  // diffuser | high-na | low-na
  uint64_t seed = 1234;
  double feature_px = 1.5;
  int superpixel_px = 0;  // 0: use the filter's super-pixel edge
};

struct RunConfig {
  double tau1 = 1e-3;
  double tau2 = 1e-3;
  TvWeights tv_weights;
  int max_iters = 500;
  std::optional<double> step;
  double convergence_tol = 0.0;
  FilterArraySpec filter;
  PsfParams psf;
  double noise_variance = 0.0;
  uint64_t seed = 1234;

  SolverConfig solver(int log_every = 1) const {
    SolverConfig c;
    c.tau1 = tau1;
    c.tau2 = tau2;
    c.tv_weights = tv_weights;
    c.max_iters = max_iters;
    c.step = step;
    c.convergence_tol = convergence_tol;
    c.log_every = log_every;
    return c;
  }
};

namespace detail {

using json = nlohmann::json;

inline FormatError cfg_error(const std::string& msg) {
  return FormatError(FormatError::Code::config, "config: " + msg);
}

inline void reject_unknown(const json& o, const std::vector<std::string>& known,
                           const std::string& where) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || it.key() == k;
    if (!ok) throw cfg_error("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline double get_num(const json& o, const char* key, double fallback,
                      const std::string& where) {
  if (!o.contains(key)) return fallback;
  const json& v = o.at(key);
  if (!v.is_number()) throw cfg_error(where + "." + key + " must be a number");
  return v.get<double>();
}

inline int get_int(const json& o, const char* key, int fallback,
                   const std::string& where) {
  if (!o.contains(key)) return fallback;
  const json& v = o.at(key);
  if (!v.is_number_integer())
    throw cfg_error(where + "." + key + " must be an integer");
  return v.get<int>();
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  using detail::cfg_error;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw cfg_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw cfg_error("top level must be an object");
  detail::reject_unknown(j,
                         {"tau1", "tau2", "tv_weights", "max_iters", "step",
                          "convergence_tol", "filter", "psf", "noise_variance",
                          "seed"},
                         "top level");
  RunConfig c;
  c.tau1 = detail::get_num(j, "tau1", c.tau1, "config");
  c.tau2 = detail::get_num(j, "tau2", c.tau2, "config");
  if (c.tau1 < 0.0 || c.tau2 < 0.0) throw cfg_error("tau1/tau2 must be >= 0");
  if (j.contains("tv_weights")) {
    const auto& w = j.at("tv_weights");
    if (!w.is_array() || w.size() != 3 || !w[0].is_number() ||
        !w[1].is_number() || !w[2].is_number())
      throw cfg_error("tv_weights must be [wx, wy, wl]");
    c.tv_weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
    if (c.tv_weights.wx < 0 || c.tv_weights.wy < 0 || c.tv_weights.wl < 0)
      throw cfg_error("tv_weights must be >= 0");
  }
  c.max_iters = detail::get_int(j, "max_iters", c.max_iters, "config");
  if (c.max_iters < 1) throw cfg_error("max_iters must be >= 1");
  if (j.contains("step")) {
    if (!j.at("step").is_number()) throw cfg_error("step must be a number");
    const double s = j.at("step").get<double>();
    if (!(s > 0.0)) throw cfg_error("step must be > 0");
    c.step = s;
  }
  c.convergence_tol =
      detail::get_num(j, "convergence_tol", c.convergence_tol, "config");
  if (c.convergence_tol < 0.0) throw cfg_error("convergence_tol must be >= 0");

  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    if (!f.is_object()) throw cfg_error("filter must be an object");
    detail::reject_unknown(f,
                           {"grid", "filter_px", "lambda_min_nm", "lambda_max_nm",
                            "bandwidth_nm", "peak_transmittance"},
                           "filter");
    if (f.contains("grid")) {
      const auto& g = f.at("grid");
      if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() ||
          !g[1].is_number_integer())
        throw cfg_error("filter.grid must be [rows, cols]");
      c.filter.grid_rows = g[0].get<int>();
      c.filter.grid_cols = g[1].get<int>();
      if (c.filter.grid_rows < 1 || c.filter.grid_cols < 1)
        throw cfg_error("filter.grid entries must be >= 1");
    }
    c.filter.filter_px = detail::get_int(f, "filter_px", c.filter.filter_px, "filter");
    if (c.filter.filter_px < 1) throw cfg_error("filter.filter_px must be >= 1");
    c.filter.lambda_min_nm =
        detail::get_num(f, "lambda_min_nm", c.filter.lambda_min_nm, "filter");
    c.filter.lambda_max_nm =
        detail::get_num(f, "lambda_max_nm", c.filter.lambda_max_nm, "filter");
    if (!(c.filter.lambda_min_nm < c.filter.lambda_max_nm))
      throw cfg_error("filter.lambda_min_nm must be < lambda_max_nm");
    c.filter.bandwidth_nm =
        detail::get_num(f, "bandwidth_nm", c.filter.bandwidth_nm, "filter");
    if (!(c.filter.bandwidth_nm > 0.0))
      throw cfg_error("filter.bandwidth_nm must be > 0");
    c.filter.peak_transmittance = detail::get_num(
        f, "peak_transmittance", c.filter.peak_transmittance, "filter");
    if (!(c.filter.peak_transmittance > 0.0 && c.filter.peak_transmittance <= 1.0))
      throw cfg_error("filter.peak_transmittance must be in (0, 1]");
  }

  if (j.contains("psf")) {
    const auto& p = j.at("psf");
    if (!p.is_object()) throw cfg_error("psf must be an object");
    detail::reject_unknown(p, {"kind", "seed", "feature_px", "superpixel_px"},
                           "psf");
    if (p.contains("kind")) {
      if (!p.at("kind").is_string()) throw cfg_error("psf.kind must be a string");
      c.psf.kind = p.at("kind").get<std::string>();
      if (c.psf.kind != "diffuser" && c.psf.kind != "high-na" &&
          c.psf.kind != "low-na")
        throw cfg_error("psf.kind must be diffuser, high-na, or low-na");
    }
    if (p.contains("seed")) {
      if (!p.at("seed").is_number_unsigned() && !p.at("seed").is_number_integer())
        throw cfg_error("psf.seed must be an integer");
      c.psf.seed = p.at("seed").get<uint64_t>();
    }
    c.psf.feature_px = detail::get_num(p, "feature_px", c.psf.feature_px, "psf");
    if (!(c.psf.feature_px >= 1.0)) throw cfg_error("psf.feature_px must be >= 1");
    c.psf.superpixel_px =
        detail::get_int(p, "superpixel_px", c.psf.superpixel_px, "psf");
    if (c.psf.superpixel_px < 0)
      throw cfg_error("psf.superpixel_px must be >= 0");
  }

  c.noise_variance =
      detail::get_num(j, "noise_variance", c.noise_variance, "config");
  if (c.noise_variance < 0.0) throw cfg_error("noise_variance must be >= 0");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw cfg_error("seed must be an integer");
    c.seed = j.at("seed").get<uint64_t>();
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw FormatError(FormatError::Code::io, path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

// Builds the filter stack for a sensor from the config; channel wavelengths
// are the filter center wavelengths.
inline FilterFunction build_filter(const RunConfig& cfg, int sensor_ny,
                                   int sensor_nx) {
  return generate_filter_function(sensor_ny, sensor_nx, cfg.filter,
                                  filter_center_wavelengths(cfg.filter));
}

// Builds the PSF named by the config at the given shape.
inline Psf build_psf(const RunConfig& cfg, int ny, int nx) {
  if (cfg.psf.kind == "diffuser")
    return generate_diffuser_psf(cfg.psf.seed, ny, nx, cfg.psf.feature_px);
  const int sp = cfg.psf.superpixel_px > 0
                     ? cfg.psf.superpixel_px
                     : cfg.filter.grid_rows * cfg.filter.filter_px;
  return generate_lens_psf(
      cfg.psf.kind == "high-na" ? LensKind::high_na : LensKind::low_na, ny, nx,
      sp);
}

}  // namespace lhsi
