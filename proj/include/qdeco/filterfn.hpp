#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <queue>
#include <vector>

#include "qdeco/noise.hpp"
#include "qdeco/schedule.hpp"

// Filter-function analytics for pulsed dephasing: the +-1 switching function
// f(t; t'), its spectral weight |f~(t,omega)|^2 (piecewise-exact and closed
// form), the attenuation exponent chi(t) and the coherence envelope
// W(t) = exp(-chi(t)).
namespace qdeco {

// Arbitrary pulse pattern: sign flips at each pulse time inside (0, t).
struct FilterSpec {
  std::vector<double> pulse_times; // us, strictly increasing
  double total_time = 0.0;         // us

  void validate() const {
    if (!(total_time > 0.0))
      throw InvalidParam("FilterSpec: total_time must be > 0");
    double prev = 0.0;
    for (double tk : pulse_times) {
      if (!(tk > prev) || !(tk < total_time))
        throw InvalidParam("FilterSpec: pulses must satisfy 0 < t1 < ... < t");
      prev = tk;
    }
  }
};

// Periodic two-window pattern: per period delta the sign is +1 for delta1
// then -1 for delta2, repeated `periods` times.
struct PeriodicWindowSpec {
  double delta = 0.0;  // us
  double delta1 = 0.0; // us
  double delta2 = 0.0; // us
  long periods = 1;

  double total_time() const { return delta * periods; }

  void validate() const {
    if (!(delta > 0.0)) throw InvalidParam("PeriodicWindowSpec: delta must be > 0");
    if (delta1 < 0.0 || delta2 < 0.0)
      throw InvalidParam("PeriodicWindowSpec: windows must be >= 0");
    if (std::abs(delta1 + delta2 - delta) > tol::duration)
      throw InvalidParam("PeriodicWindowSpec: delta1 + delta2 != delta");
    if (periods < 1) throw InvalidParam("PeriodicWindowSpec: periods must be >= 1");
  }
};

// +-1 value of the switching function; exact pulse times take the value of
// the interval ending there.
inline int filter_value(const FilterSpec& spec, double t_prime) {
  spec.validate();
  if (t_prime < 0.0 || t_prime > spec.total_time)
    throw OutOfRange("filter_value: t' outside [0, t]");
  long flips = std::lower_bound(spec.pulse_times.begin(),
                                spec.pulse_times.end(), t_prime) -
               spec.pulse_times.begin();
  // lower_bound counts pulses with t_k < t' (ties excluded), which realizes
  // the left-interval convention at exact pulse times.
  return (flips % 2 == 0) ? 1 : -1;
}

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

} // namespace detail

// |f~(t,omega)|^2 by exact integration of each constant-sign interval; no
// discretization error at any omega.
inline double filter_ft_sq_numeric(const FilterSpec& spec, double omega) {
  spec.validate();
  if (!std::isfinite(omega)) throw InvalidParam("filter_ft_sq_numeric: bad omega");
  std::complex<double> acc(0.0, 0.0);
  double a = 0.0;
  double sign = 1.0;
  auto add = [&](double lo, double hi, double s) {
    double len = hi - lo;
    if (len <= 0.0) return;
    double mid = 0.5 * (lo + hi);
    // integral of e^{i omega s} over [lo, hi]
    acc += s * len * detail::sinc(0.5 * omega * len) *
           std::complex<double>(std::cos(omega * mid), std::sin(omega * mid));
  };
  for (double tk : spec.pulse_times) {
    add(a, tk, sign);
    a = tk;
    sign = -sign;
  }
  add(a, spec.total_time, sign);
  return std::norm(acc);
}

// Closed form for the periodic window pattern,
//   |f~|^2 = (1/w^2) [(1-cos wt)/(1-cos wd)] (6 + 2cos wd - 4cos wd1 - 4cos wd2),
// evaluated through cancellation-free identities. Singular points are handled
// by their limits: the Dirichlet factor tends to m^2 at w d = 2 pi k, and the
// w -> 0 value is t^2 (2 d1^2 + 2 d2^2 - d^2)/d^2.
inline double filter_ft_sq_closed(const PeriodicWindowSpec& spec, double omega) {
  spec.validate();
  if (!std::isfinite(omega)) throw InvalidParam("filter_ft_sq_closed: bad omega");
  const double d = spec.delta, d1 = spec.delta1, d2 = spec.delta2;
  const double m = static_cast<double>(spec.periods);
  if (omega == 0.0) {
    double t = spec.total_time();
    return t * t * (2.0 * d1 * d1 + 2.0 * d2 * d2 - d * d) / (d * d);
  }
  const double p = 0.5 * omega * d1;
  const double q = 0.5 * omega * d2;
  const double sp = std::sin(p), sq = std::sin(q);
  const double shalf = std::sin(0.5 * (p + q));
  // single-period weight: (1/w^2) |2 e^{i w d1} - 1 - e^{i w d}|^2
  double g = 4.0 * (sp - sq) * (sp - sq) + 16.0 * sp * sq * shalf * shalf;
  // Dirichlet factor sin^2(m x)/sin^2(x), x = w d / 2
  const double e = std::remainder(0.5 * omega * d, M_PI);
  double r = (e == 0.0) ? m : std::sin(m * e) / std::sin(e);
  return r * r * g / (omega * omega);
}

struct ChiResult {
  double value = 0.0;            // attenuation exponent, dimensionless
  double truncation_bound = 0.0; // tail envelope beyond omega_max
  long evaluations = 0;          // integrand evaluations spent
};

namespace detail {

// Adaptive panel quadrature tuned for oscillatory integrands: the starting
// partition resolves the fastest oscillation scale, then panels are bisected
// worst-first using the Gauss-Kronrod error estimate.
template <typename F>
inline std::pair<double, long> integrate_adaptive(const F& f, double lo,
                                                  double hi, double osc_scale,
                                                  double rel_tol,
                                                  long max_evals) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  struct Panel {
    double err, lo, hi, val;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  double width = hi - lo;
  long n0 = std::max<long>(1, static_cast<long>(std::ceil(width / osc_scale)));
  n0 = std::max<long>(1, std::min<long>(n0, max_evals / 15));
  std::priority_queue<Panel> q;
  double total = 0.0, total_err = 0.0;
  long evals = 0;
  for (long k = 0; k < n0; ++k) {
    double a = lo + width * k / n0;
    double b = lo + width * (k + 1) / n0;
    double err = 0.0;
    double v = gk::integrate(f, a, b, 0, 0.0, &err);
    evals += 15;
    q.push({err, a, b, v});
    total += v;
    total_err += err;
  }
  double scale = std::max(std::abs(total), 1e-300);
  while (total_err > rel_tol * scale) {
    if (evals + 30 > max_evals)
      throw QuadratureNotConverged(
          "quadrature: relative tolerance not reached within evaluation budget");
    Panel p = q.top();
    q.pop();
    total -= p.val;
    total_err -= p.err;
    double mid = 0.5 * (p.lo + p.hi);
    for (int half = 0; half < 2; ++half) {
      double a = half == 0 ? p.lo : mid;
      double b = half == 0 ? mid : p.hi;
      double err = 0.0;
      double v = gk::integrate(f, a, b, 0, 0.0, &err);
      evals += 15;
      q.push({err, a, b, v});
      total += v;
      total_err += err;
    }
    scale = std::max(std::abs(total), 1e-300);
  }
  return {total, evals};
}

inline ChiResult chi_impl(const std::function<double(double)>& ft_sq,
                          double total_time, const OrnsteinUhlenbeck& noise,
                          double omega_max, double rel_tol, long max_evals) {
  noise.validate();
  if (!(omega_max > 0.0)) throw InvalidParam("chi: omega_max must be > 0");
  auto integrand = [&](double w) {
    return noise.spectral_density(w) * ft_sq(w) / (2.0 * M_PI);
  };
  double osc = 2.0 * M_PI / total_time;
  auto [value, evals] =
      integrate_adaptive(integrand, 0.0, omega_max, osc, rel_tol, max_evals);
  ChiResult r;
  r.value = value;
  r.evaluations = evals;
  r.truncation_bound =
      noise.l * noise.l * 2.0 * noise.R / (M_PI * omega_max) * total_time;
  return r;
}

} // namespace detail

inline ChiResult chi(const FilterSpec& spec, const OrnsteinUhlenbeck& noise,
                     double omega_max, double rel_tol = 1e-8,
                     long max_evals = 1000000) {
  spec.validate();
  return detail::chi_impl(
      [&](double w) { return filter_ft_sq_numeric(spec, w); },
      spec.total_time, noise, omega_max, rel_tol, max_evals);
}

inline ChiResult chi(const PeriodicWindowSpec& spec,
                     const OrnsteinUhlenbeck& noise, double omega_max,
                     double rel_tol = 1e-8, long max_evals = 1000000) {
  spec.validate();
  return detail::chi_impl(
      [&](double w) { return filter_ft_sq_closed(spec, w); },
      spec.total_time(), noise, omega_max, rel_tol, max_evals);
}

template <typename Spec>
inline double coherence_envelope(const Spec& spec,
                                 const OrnsteinUhlenbeck& noise,
                                 double omega_max, double rel_tol = 1e-8,
                                 long max_evals = 1000000) {
  return std::exp(-chi(spec, noise, omega_max, rel_tol, max_evals).value);
}

// Default integration cutoff.
inline double default_omega_max(const OrnsteinUhlenbeck& noise, double delta) {
  return 200.0 * std::max(noise.R, 2.0 * M_PI / delta);
}

// Pulse pattern of a compiled 2-level single-channel schedule: every swap
// gate flips the sign. Coincident gate pairs cancel.
inline FilterSpec filter_from_schedule(const PulseSchedule& s) {
  if (s.dim != 2 && s.dim != 3)
    throw UnsupportedSchedule("filter_from_schedule: dim must be 2 or 3");
  FilterSpec spec;
  spec.total_time = s.total_wall_time();
  std::vector<double> times = gate_wall_times(s);
  std::vector<double> kept;
  for (double t : times) {
    if (!kept.empty() && kept.back() == t)
      kept.pop_back(); // adjacent equal-time flips cancel
    else
      kept.push_back(t);
  }
  for (double t : kept)
    if (t > 0.0 && t < spec.total_time) spec.pulse_times.push_back(t);
  spec.validate();
  return spec;
}

// Full-cycle periodic pattern of the one-channel schedule family (system-on
// slice included): period (1+lambda)dt, +1 for (1+lambda-mu)dt, -1 for mu dt.
inline PeriodicWindowSpec periodic_window_full_cycle(double lambda, double mu,
                                                     double dt, long periods) {
  PeriodicWindowSpec w;
  w.delta = (1.0 + lambda) * dt;
  w.delta1 = (1.0 + lambda - mu) * dt;
  w.delta2 = mu * dt;
  w.periods = periods;
  w.validate();
  return w;
}

// Decoupling-window-only pattern: period lambda dt split as (lambda-mu)dt
// and mu dt.
inline PeriodicWindowSpec periodic_window_decoupling_only(double lambda,
                                                          double mu, double dt,
                                                          long periods) {
  PeriodicWindowSpec w;
  w.delta = lambda * dt;
  w.delta1 = (lambda - mu) * dt;
  w.delta2 = mu * dt;
  w.periods = periods;
  w.validate();
  return w;
}

}
