#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qdeco/model.hpp"
#include "qdeco/qmat.hpp"

// Trotterized decoupling pulse schedules: construction, compilation to
// unitaries, first-order average Hamiltonians, per-pair dephasing
// coefficients and the closed-form coherence-time predictions.
namespace qdeco {

// Free-evolution slice. system_on selects whether the qudit Hamiltonian acts
// (in lab-frame simulations it gates the microwave drive instead; the static
// NV terms are not gateable). The noise coupling always acts.
struct Segment {
  double duration = 0.0; // us
  bool system_on = false;
};

// Instantaneous level-swap gate u_ij, 0-based level indices, i < j.
struct GateEvent {
  int i = 0;
  int j = 0;
};

using CycleEvent = std::variant<Segment, GateEvent>;

enum class ScheduleKind { amplify, one_channel, two_channel, general, custom };

// One Trotter cycle (ordered events, applied front to back) repeated
// `repeats` times. The system-on slice of length dt comes first; the
// remaining lambda*dt is the decoupling window.
struct PulseSchedule {
  int dim = 2;
  double dt = 0.0; // us
  std::vector<CycleEvent> cycle;
  long repeats = 1;
  ScheduleKind kind = ScheduleKind::custom;
  std::map<std::string, double> params;
  bool extended_region = false; // parameters beyond the tau <= 1 window
  std::vector<std::string> warnings;

  double param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
      throw UndefinedParam("schedule parameter '" + name + "' not set");
    return it->second;
  }

  bool has_param(const std::string& name) const {
    return params.count(name) != 0;
  }

  double cycle_wall_time() const {
    double t = 0.0;
    for (const auto& ev : cycle)
      if (const auto* s = std::get_if<Segment>(&ev)) t += s->duration;
    return t;
  }

  double cycle_system_time() const {
    double t = 0.0;
    for (const auto& ev : cycle)
      if (const auto* s = std::get_if<Segment>(&ev))
        if (s->system_on) t += s->duration;
    return t;
  }

  double total_wall_time() const { return cycle_wall_time() * repeats; }

  // net permutation of one cycle: slot -> level occupying it at cycle end
  std::vector<int> net_permutation() const {
    std::vector<int> level_in_slot(dim);
    std::iota(level_in_slot.begin(), level_in_slot.end(), 0);
    for (const auto& ev : cycle)
      if (const auto* g = std::get_if<GateEvent>(&ev))
        std::swap(level_in_slot[g->i], level_in_slot[g->j]);
    return level_in_slot;
  }

  bool net_identity() const {
    auto p = net_permutation();
    for (int k = 0; k < dim; ++k)
      if (p[k] != k) return false;
    return true;
  }

  void validate() const {
    if (dim < 2) throw InvalidParam("PulseSchedule: dim must be >= 2");
    if (!(dt > 0.0)) throw InvalidParam("PulseSchedule: dt must be > 0");
    if (repeats < 1) throw InvalidParam("PulseSchedule: repeats must be >= 1");
    for (const auto& ev : cycle) {
      if (const auto* s = std::get_if<Segment>(&ev)) {
        if (s->duration < 0.0)
          throw NegativeDuration("PulseSchedule: negative segment duration");
      } else {
        const auto& g = std::get<GateEvent>(ev);
        if (g.i < 0 || g.j <= g.i || g.j >= dim)
          throw InvalidParam("PulseSchedule: bad gate pair");
      }
    }
    if (kind != ScheduleKind::custom && has_param("lambda")) {
      double budget = (1.0 + param("lambda")) * dt;
      if (std::abs(cycle_wall_time() - budget) > tol::duration)
        throw InvalidParam("PulseSchedule: cycle time != (1+lambda)*dt");
    }
  }
};

// ---------------------------------------------------------------------------
// builders

// (system on for dt) (system off for lambda dt), no pulses
inline PulseSchedule build_amplify_schedule(double lambda, double dt, long n,
                                            int dim = 2) {
  if (lambda < 0.0) throw InvalidParam("amplify: lambda must be >= 0");
  if (!(dt > 0.0)) throw InvalidParam("amplify: dt must be > 0");
  if (n < 1) throw InvalidParam("amplify: repeats must be >= 1");
  PulseSchedule s;
  s.dim = dim;
  s.dt = dt;
  s.repeats = n;
  s.kind = ScheduleKind::amplify;
  s.params["lambda"] = lambda;
  s.cycle = {Segment{dt, true}, Segment{lambda * dt, false}};
  s.validate();
  return s;
}

// One decoupled channel: swap pair at offsets (lambda-mu)dt and mu*dt inside
// the window. dim 2 uses the sigma_x swap of the two encoded levels; dim 3
// swaps levels (+1, 0).
inline PulseSchedule build_one_channel_schedule(double lambda, double mu,
                                                double dt, long n,
                                                int dim = 3) {
  if (lambda < 0.0) throw InvalidParam("one_channel: lambda must be >= 0");
  if (mu < 0.0 || mu > lambda)
    throw InvalidParam("one_channel: mu must lie in [0, lambda]");
  if (dim != 2 && dim != 3)
    throw InvalidParam("one_channel: dim must be 2 or 3");
  PulseSchedule s;
  s.dim = dim;
  s.dt = dt;
  s.repeats = n;
  s.kind = ScheduleKind::one_channel;
  s.params["lambda"] = lambda;
  s.params["mu"] = mu;
  if (lambda > 0.0) s.params["tau"] = 2.0 * mu / lambda;
  s.extended_region = lambda > 0.0 && mu > lambda / 2.0;
  s.cycle = {Segment{dt, true}, Segment{(lambda - mu) * dt, false},
             GateEvent{0, 1}, Segment{mu * dt, false}, GateEvent{0, 1}};
  s.validate();
  return s;
}

// Two decoupled channels (dim 3): u_23 at (lambda-mu2)dt, u_12 pair around
// the mu1*dt tail. Requires mu1 <= mu2 <= lambda for all waits to be
// non-negative; mu1 > mu2 (tau1 > tau2) is infeasible.
inline PulseSchedule build_two_channel_schedule(double lambda, double mu1,
                                                double mu2, double dt,
                                                long n) {
  if (lambda < 0.0) throw InvalidParam("two_channel: lambda must be >= 0");
  if (mu1 < 0.0 || mu2 > lambda)
    throw InvalidParam("two_channel: need 0 <= mu1, mu2 <= lambda");
  if (mu1 > mu2)
    throw NegativeDuration(
        "two_channel: mu1 > mu2 makes the middle wait negative (infeasible)");
  PulseSchedule s;
  s.dim = 3;
  s.dt = dt;
  s.repeats = n;
  s.kind = ScheduleKind::two_channel;
  s.params["lambda"] = lambda;
  s.params["mu1"] = mu1;
  s.params["mu2"] = mu2;
  if (lambda > 0.0) {
    s.params["tau1"] = 2.0 * mu1 / lambda;
    s.params["tau2"] = 2.0 * mu2 / lambda;
  }
  s.extended_region = lambda > 0.0 && (mu1 > lambda / 2.0 || mu2 > lambda / 2.0);
  s.cycle = {Segment{dt, true},
             Segment{(lambda - mu2) * dt, false},
             GateEvent{1, 2},
             Segment{(mu2 - mu1) * dt, false},
             GateEvent{0, 1},
             Segment{mu1 * dt, false},
             GateEvent{0, 1},
             GateEvent{1, 2}};
  s.validate();
  return s;
}

// General d-level sequence: system slice, wait t0, then one swap per level
// pair with its wait, then the closing swap block that restores the identity
// permutation. Pairs are applied in reverse-lexicographic order, matching the
// right-to-left reading of the lexicographic operator product.
inline PulseSchedule build_general_schedule(
    int dim, double lambda, double t0,
    const std::map<std::pair<int, int>, double>& waits, double dt, long n) {
  if (dim < 2 || dim > 8) throw InvalidParam("general: dim must be in 2..8");
  if (lambda < 0.0) throw InvalidParam("general: lambda must be >= 0");
  if (t0 < 0.0) throw NegativeDuration("general: t0 must be >= 0");
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) pairs.emplace_back(i, j);
  double total = t0;
  for (const auto& p : pairs) {
    auto it = waits.find(p);
    double w = it == waits.end() ? 0.0 : it->second;
    if (w < 0.0) throw NegativeDuration("general: negative wait");
    total += w;
  }
  for (const auto& [p, w] : waits)
    if (std::find(pairs.begin(), pairs.end(), p) == pairs.end())
      throw InvalidParam("general: wait given for invalid pair");
  if (std::abs(total - lambda * dt) > tol::duration)
    throw InvalidParam("general: waits must sum to lambda*dt");

  PulseSchedule s;
  s.dim = dim;
  s.dt = dt;
  s.repeats = n;
  s.kind = ScheduleKind::general;
  s.params["lambda"] = lambda;
  s.cycle.push_back(Segment{dt, true});
  s.cycle.push_back(Segment{t0, false});
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
    auto w = waits.find(*it);
    s.cycle.push_back(GateEvent{it->first, it->second});
    s.cycle.push_back(Segment{w == waits.end() ? 0.0 : w->second, false});
  }
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it)
    s.cycle.push_back(GateEvent{it->first, it->second});
  s.validate();
  return s;
}

inline double mu_from_tau(double tau, double lambda) {
  return tau * lambda / 2.0;
}

// ---------------------------------------------------------------------------
// schedule analytics

// Default diagonal noise weights per level: the NV {+1,-1} subspace for
// dim 2, the spin-1 ladder for dim 3, and the spin-(d-1)/2 ladder above.
inline std::vector<double> default_dephase_weights(int dim) {
  if (dim == 2) return {1.0, -1.0};
  std::vector<double> w(dim);
  double s = (dim - 1) / 2.0;
  for (int k = 0; k < dim; ++k) w[k] = s - k;
  return w;
}

// Effective dephasing coefficients per level pair, c_ij = w_i - w_j, where
// w_m is the phase weight accumulated by level m over one cycle (in units of
// the system step dt).
struct PairCoefficients {
  int dim = 0;
  Eigen::MatrixXd c; // antisymmetric

  double at(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim || j >= dim)
      throw OutOfRange("PairCoefficients: pair out of range");
    return c(i, j);
  }
};

// Per-level phase-accumulation bookkeeping: each level's amplitude rides
// through the slots permuted by the swap gates and picks up the dephasing
// weight of the slot it currently occupies, for the duration of every
// segment (the system-on slice included).
inline std::vector<double> level_phase_weights(
    const PulseSchedule& s, const std::vector<double>& weights) {
  s.validate();
  if (static_cast<int>(weights.size()) != s.dim)
    throw DimensionMismatch("level_phase_weights: weights length != dim");
  if (!s.net_identity())
    throw UnsupportedSchedule(
        "level_phase_weights: cycle permutation is not the identity");
  std::vector<int> level_in_slot(s.dim);
  std::iota(level_in_slot.begin(), level_in_slot.end(), 0);
  std::vector<double> w(s.dim, 0.0);
  for (const auto& ev : s.cycle) {
    if (const auto* seg = std::get_if<Segment>(&ev)) {
      for (int slot = 0; slot < s.dim; ++slot)
        w[level_in_slot[slot]] += seg->duration * weights[slot];
    } else {
      const auto& g = std::get<GateEvent>(ev);
      std::swap(level_in_slot[g.i], level_in_slot[g.j]);
    }
  }
  for (auto& x : w) x /= s.dt;
  return w;
}

inline PairCoefficients pair_coefficients(const PulseSchedule& s,
                                          const std::vector<double>& weights) {
  auto w = level_phase_weights(s, weights);
  PairCoefficients pc;
  pc.dim = s.dim;
  pc.c = Eigen::MatrixXd::Zero(s.dim, s.dim);
  for (int i = 0; i < s.dim; ++i)
    for (int j = 0; j < s.dim; ++j) pc.c(i, j) = w[i] - w[j];
  return pc;
}

inline PairCoefficients pair_coefficients(const PulseSchedule& s) {
  return pair_coefficients(s, default_dephase_weights(s.dim));
}

// Closed-form three-level coefficient tables for the standard families.
// Total functions of the parameters, defined also where the schedule itself
// is infeasible.
struct ThreeLevelCoefficients {
  double c12, c13, c23;
};

inline ThreeLevelCoefficients one_channel_coefficients(double lambda,
                                                       double mu) {
  return {1.0 + lambda - 2.0 * mu, 2.0 + 2.0 * lambda - mu,
          1.0 + lambda + mu};
}

inline ThreeLevelCoefficients two_channel_coefficients(double lambda,
                                                       double mu1,
                                                       double mu2) {
  return {1.0 + lambda - (mu1 - mu2), 2.0 + 2.0 * lambda - (2.0 * mu1 + mu2),
          1.0 + lambda - (mu1 + 2.0 * mu2)};
}

// First-order average Hamiltonian of one cycle at fixed field b, normalized
// per system-on step dt: (1/dt) sum of duration * P^dag H_active P with P the
// running gate product. Hermitian and linear in b for any net-identity cycle.
inline ComplexMatrix effective_hamiltonian(const PulseSchedule& s,
                                           const QuditModel& model, double b) {
  s.validate();
  model.validate();
  if (model.dim != s.dim)
    throw DimensionMismatch("effective_hamiltonian: model dim != schedule dim");
  if (!s.net_identity())
    throw UnsupportedSchedule(
        "effective_hamiltonian: cycle permutation is not the identity");
  ComplexMatrix h_s = model.hamiltonian();
  ComplexMatrix h_sb = coupling_operator(model, b);
  ComplexMatrix acc = ComplexMatrix::Zero(s.dim, s.dim);
  ComplexMatrix p = ComplexMatrix::Identity(s.dim, s.dim);
  for (const auto& ev : s.cycle) {
    if (const auto* seg = std::get_if<Segment>(&ev)) {
      ComplexMatrix h = h_sb;
      if (seg->system_on) h += h_s;
      acc += seg->duration * (p.adjoint() * h * p);
    } else {
      const auto& g = std::get<GateEvent>(ev);
      p = swap_gate_matrix(s.dim, g.i, g.j).m * p;
    }
  }
  return acc / s.dt;
}

// Full unitary of the schedule at fixed field b (cycle product raised to the
// repeat count).
inline UnitaryMatrix compile_unitary(const PulseSchedule& s,
                                     const QuditModel& model, double b) {
  s.validate();
  model.validate();
  if (model.dim != s.dim)
    throw DimensionMismatch("compile_unitary: model dim != schedule dim");
  ComplexMatrix h_s = model.hamiltonian();
  ComplexMatrix h_sb = coupling_operator(model, b);
  ComplexMatrix u = ComplexMatrix::Identity(s.dim, s.dim);
  for (const auto& ev : s.cycle) {
    if (const auto* seg = std::get_if<Segment>(&ev)) {
      if (seg->duration == 0.0) continue;
      ComplexMatrix h = h_sb;
      if (seg->system_on) h += h_s;
      u = expm_hermitian(h, seg->duration).m * u;
    } else {
      const auto& g = std::get<GateEvent>(ev);
      u = swap_gate_matrix(s.dim, g.i, g.j).m * u;
    }
  }
  // binary exponentiation over the repeat count
  ComplexMatrix total = ComplexMatrix::Identity(s.dim, s.dim);
  ComplexMatrix base = u;
  long n = s.repeats;
  while (n > 0) {
    if (n & 1) total = base * total;
    base = base * base;
    n >>= 1;
  }
  return {total};
}

// Wall-clock times of every gate over the full schedule, for filter-function
// construction.
inline std::vector<double> gate_wall_times(const PulseSchedule& s) {
  std::vector<double> times;
  double cycle_span = s.cycle_wall_time();
  for (long rep = 0; rep < s.repeats; ++rep) {
    double t = rep * cycle_span;
    for (const auto& ev : s.cycle) {
      if (const auto* seg = std::get_if<Segment>(&ev))
        t += seg->duration;
      else
        times.push_back(t);
    }
  }
  return times;
}

// T2 prediction from a pair coefficient: sqrt(2) / (sigma_b |c|); infinite
// when the coefficient vanishes.
inline double analytic_t2(double c_ij, double sigma_b) {
  if (!(sigma_b > 0.0)) throw InvalidParam("analytic_t2: sigma_b must be > 0");
  if (c_ij == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0) / (sigma_b * std::abs(c_ij));
}

// Normalized coherence magnitude exp(-sigma_b^2 c^2 t^2 / 2) at system time t.
inline double analytic_coherence(double c_ij, double sigma_b, double t) {
  if (t < 0.0) throw InvalidParam("analytic_coherence: t must be >= 0");
  double x = sigma_b * c_ij * t;
  return std::exp(-0.5 * x * x);
}

}
