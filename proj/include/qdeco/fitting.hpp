#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qdeco/engine.hpp"
#include "qdeco/schedule.hpp"

// Gaussian-decay fitting of coherence series and parameter sweeps.
namespace qdeco {

struct T2Fit {
  double amplitude = 0.0;   // fitted |rho(0)|
  double t2 = 0.0;          // us; +inf when nondecaying
  double t2_stderr = 0.0;   // us, from the linear-regression covariance
  double residual = 0.0;    // rms residual of the log-domain fit
  int points_used = 0;
  bool nondecaying = false; // fitted T2 exceeds 1e3 x observation window
};

// Least squares of ln|v(t)| = ln A - (t/T2)^2 over points above the floor.
inline T2Fit fit_gaussian_decay(const std::vector<double>& times,
                                const std::vector<double>& mags,
                                double floor_frac = 0.05) {
  if (times.size() != mags.size() || times.empty())
    throw InsufficientData("fit_gaussian_decay: empty or mismatched series");
  const double initial = mags.front();
  if (!(initial > 0.0))
    throw InsufficientData("fit_gaussian_decay: initial coherence is zero");
  const double floor = floor_frac * initial;
  std::vector<double> x, y;
  for (size_t k = 0; k < times.size(); ++k) {
    if (mags[k] > floor) {
      x.push_back(times[k] * times[k]);
      y.push_back(std::log(mags[k]));
    }
  }
  const int n = static_cast<int>(x.size());
  if (n < 5)
    throw InsufficientData("fit_gaussian_decay: fewer than 5 points above floor");
  double sx = 0.0, sy = 0.0;
  for (int k = 0; k < n; ++k) {
    sx += x[k];
    sy += y[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0)
    throw InsufficientData("fit_gaussian_decay: degenerate time grid");
  const double beta = sxy / sxx; // = -1/T2^2
  const double alpha = my - beta * mx;
  double ssr = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = y[k] - alpha - beta * x[k];
    ssr += r * r;
  }
  T2Fit fit;
  fit.amplitude = std::exp(alpha);
  fit.points_used = n;
  fit.residual = std::sqrt(ssr / n);
  const double window = times.back() - times.front();
  if (beta >= 0.0) {
    fit.nondecaying = true;
    fit.t2 = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.t2 = 1.0 / std::sqrt(-beta);
  if (fit.t2 > 1e3 * window) {
    fit.nondecaying = true;
    fit.t2 = std::numeric_limits<double>::infinity();
    return fit;
  }
  if (n > 2) {
    const double var_beta = (ssr / (n - 2)) / sxx;
    fit.t2_stderr = 0.5 * std::pow(-beta, -1.5) * std::sqrt(var_beta);
  }
  return fit;
}

inline T2Fit fit_gaussian_decay(const CoherenceSeries& series,
                                double floor_frac = 0.05) {
  std::vector<double> mags(series.values.size());
  for (size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(series.values[k]);
  return fit_gaussian_decay(series.times, mags, floor_frac);
}

// ---------------------------------------------------------------------------
// parameter sweeps

// mu-style offset for a (mu, tau) parameter pair after setting `swept`.
// A directly swept mu wins; a swept tau converts through mu dt = tau lambda
// dt / 2; sweeping lambda keeps a declared tau fixed and recomputes mu.
inline double resolve_mu_param(const std::map<std::string, double>& p,
                               const std::string& swept,
                               const std::string& mu_key,
                               const std::string& tau_key, double lambda) {
  auto get = [&p](const std::string& k) { return p.at(k); };
  if (swept == mu_key) return get(mu_key);
  if (swept == tau_key) return mu_from_tau(get(tau_key), lambda);
  if (swept == "lambda" && p.count(tau_key))
    return mu_from_tau(get(tau_key), lambda);
  if (p.count(mu_key)) return get(mu_key);
  if (p.count(tau_key)) return mu_from_tau(get(tau_key), lambda);
  return 0.0;
}

// Rebuild a builder-produced schedule with one named parameter changed.
inline PulseSchedule rebuild_schedule(const PulseSchedule& s,
                                      const std::string& name, double value) {
  auto p = s.params;
  p[name] = value;
  const double lambda = p.count("lambda") ? p.at("lambda") : 0.0;
  switch (s.kind) {
    case ScheduleKind::amplify:
      return build_amplify_schedule(lambda, s.dt, s.repeats, s.dim);
    case ScheduleKind::one_channel:
      return build_one_channel_schedule(
          lambda, resolve_mu_param(p, name, "mu", "tau", lambda), s.dt,
          s.repeats, s.dim);
    case ScheduleKind::two_channel:
      return build_two_channel_schedule(
          lambda, resolve_mu_param(p, name, "mu1", "tau1", lambda),
          resolve_mu_param(p, name, "mu2", "tau2", lambda), s.dt, s.repeats);
    default:
      throw UnsupportedSchedule(
          "rebuild_schedule: only the standard families can be swept");
  }
}

struct SweepOptions {
  double horizon_factor = 2.2; // observation window in units of max T2
  long max_points = 400;       // cap on recorded points per run
  int target_points = 80;      // sampling density goal for the fastest pair
  int workers = 0;
  double floor_frac = 0.05;
};

struct SweepCell {
  T2Fit fit;
  double analytic = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRow {
  double value = 0.0;
  bool feasible = true;
  std::string note;
  std::vector<SweepCell> cells; // per pair, lexicographic
};

struct SweepResult {
  std::string param;
  std::vector<std::pair<int, int>> pairs;
  std::vector<SweepRow> rows;
};

// Adjust cycle count and stride so the fastest finite-T2 pair keeps enough
// samples above the fit floor while the slowest one still decays.
inline void autoscale_horizon(SimulationSpec& spec, double sigma_b,
                              const SweepOptions& opt) {
  auto pc = pair_coefficients(spec.schedule);
  double t2_min = std::numeric_limits<double>::infinity();
  double t2_max = 0.0;
  for (int i = 0; i < pc.dim; ++i)
    for (int j = i + 1; j < pc.dim; ++j) {
      double t2 = analytic_t2(pc.at(i, j), sigma_b);
      if (std::isfinite(t2)) {
        t2_min = std::min(t2_min, t2);
        t2_max = std::max(t2_max, t2);
      }
    }
  if (!std::isfinite(t2_min)) return; // every pair echo-protected; keep as is
  const double dt = spec.schedule.dt;
  long stride = std::max<long>(
      1, static_cast<long>(std::floor(1.7 * t2_min / (opt.target_points * dt))));
  double horizon = opt.horizon_factor * t2_max;
  long points = static_cast<long>(std::ceil(horizon / (stride * dt)));
  points = std::min(points, opt.max_points);
  spec.sample_stride = static_cast<int>(stride);
  spec.schedule.repeats = std::max<long>(8, points) * stride;
}

// Monte Carlo T2 per pair across a parameter grid, with the closed-form
// prediction alongside. Infeasible parameter points are flagged and carry
// analytic values only where the coefficient formulas extend.
inline SweepResult sweep(const SimulationSpec& spec_template,
                         const std::string& param,
                         const std::vector<double>& values,
                         const SweepOptions& opt = {}) {
  static const std::vector<std::string> known = {
      "lambda", "mu", "mu1", "mu2", "tau", "tau1", "tau2"};
  if (std::find(known.begin(), known.end(), param) == known.end())
    throw InvalidParam("sweep: unknown parameter '" + param + "'");
  SweepResult result;
  result.param = param;
  const int d = spec_template.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) result.pairs.emplace_back(i, j);
  const auto* sg = std::get_if<StaticGaussian>(&spec_template.noise);

  for (double v : values) {
    SweepRow row;
    row.value = v;
    SimulationSpec spec = spec_template;
    bool built = true;
    try {
      spec.schedule = rebuild_schedule(spec_template.schedule, param, v);
    } catch (const Error& e) {
      built = false;
      row.feasible = false;
      row.note = e.what();
    }
    if (built) {
      if (sg != nullptr) autoscale_horizon(spec, sg->sigma_b, opt);
      auto pc = pair_coefficients(spec.schedule);
      EnsembleResult ens = run_ensemble(spec, opt.workers);
      for (auto [i, j] : result.pairs) {
        SweepCell cell;
        if (sg != nullptr) cell.analytic = analytic_t2(pc.at(i, j), sg->sigma_b);
        try {
          cell.fit = fit_gaussian_decay(ens.pair(i, j), opt.floor_frac);
        } catch (const InsufficientData&) {
          cell.fit.nondecaying = true;
          cell.fit.t2 = std::numeric_limits<double>::quiet_NaN();
        }
        row.cells.push_back(cell);
      }
    } else if (sg != nullptr && spec_template.schedule.kind ==
                                    ScheduleKind::two_channel) {
      // formulas extend where the schedule does not
      auto p = spec_template.schedule.params;
      p[param] = v;
      double lambda = p.count("lambda") ? p["lambda"] : 0.0;
      double mu1 = resolve_mu_param(p, param, "mu1", "tau1", lambda);
      double mu2 = resolve_mu_param(p, param, "mu2", "tau2", lambda);
      auto c = two_channel_coefficients(lambda, mu1, mu2);
      const double cs[3] = {c.c12, c.c13, c.c23};
      for (int k = 0; k < 3; ++k) {
        SweepCell cell;
        cell.analytic = analytic_t2(cs[k], sg->sigma_b);
        cell.fit.t2 = std::numeric_limits<double>::quiet_NaN();
        cell.fit.nondecaying = false;
        row.cells.push_back(cell);
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}
