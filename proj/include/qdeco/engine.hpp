#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qdeco/model.hpp"
#include "qdeco/noise.hpp"
#include "qdeco/qmat.hpp"
#include "qdeco/schedule.hpp"

// Monte Carlo density-matrix propagation under a pulse schedule and a
// classical noise model, with deterministic trajectory-parallel ensemble
// averaging.
//
// Time axes: the recorded `times` are system time (cycle index times the
// Trotter step dt); `wall_times` include the decoupling windows. All
// closed-form decay laws are stated in system time.
namespace qdeco {

struct SimulationSpec {
  QuditModel model;              // rotating-frame mode
  std::optional<NVParams> nv;    // lab-frame mode when set
  bool lab_frame = false;
  PulseSchedule schedule;
  std::vector<CycleEvent> prep;  // executed once before the cycles
  NoiseModel noise = NoNoise{};
  ComplexVector initial_state;
  long trajectories = 10000;
  int sample_stride = 1;
  std::uint64_t master_seed = 1;
  double substep_max_phase = 0.05; // ||H|| * substep bound, rad (lab frame)

  int dim() const { return lab_frame ? 3 : model.dim; }

  void validate() const {
    schedule.validate();
    if (lab_frame) {
      if (!nv) throw InvalidParam("SimulationSpec: lab frame needs NVParams");
      nv->validate();
      if (schedule.dim != 3)
        throw InvalidParam("SimulationSpec: lab frame is three-level");
    } else {
      model.validate();
      if (model.dim != schedule.dim)
        throw DimensionMismatch("SimulationSpec: model dim != schedule dim");
    }
    if (initial_state.size() != dim())
      throw DimensionMismatch("SimulationSpec: initial state has wrong dim");
    if (std::abs(initial_state.norm() - 1.0) > tol::norm)
      throw InvalidParam("SimulationSpec: initial state not normalized");
    if (trajectories < 1)
      throw InvalidParam("SimulationSpec: trajectories must be >= 1");
    if (sample_stride < 1)
      throw InvalidParam("SimulationSpec: sample_stride must be >= 1");
    if (std::holds_alternative<StaticGaussian>(noise))
      std::get<StaticGaussian>(noise).validate();
    if (std::holds_alternative<OrnsteinUhlenbeck>(noise))
      std::get<OrnsteinUhlenbeck>(noise).validate();
  }

  long recorded_points() const {
    return schedule.repeats / sample_stride + 1;
  }
};

struct CoherenceSeries {
  int i = 0, j = 0;                    // level pair, i < j
  std::vector<double> times;           // system time, us
  std::vector<complexd> values;        // ensemble mean rho_ij
  std::vector<double> stderrs;         // standard error of |rho_ij|
};

struct PopulationSeries {
  int level = 0;
  std::vector<double> times;
  std::vector<double> values;
};

struct EnsembleResult {
  std::vector<double> times;      // system time, us
  std::vector<double> wall_times; // us
  std::vector<CoherenceSeries> coherences;  // pairs in lexicographic order
  std::vector<PopulationSeries> populations;
  long trajectories = 0;

  const CoherenceSeries& pair(int i, int j) const {
    for (const auto& c : coherences)
      if (c.i == i && c.j == j) return c;
    throw OutOfRange("EnsembleResult: no such pair");
  }
};

namespace detail {

inline complexd cis(double phase) {
  return complexd(std::cos(phase), std::sin(phase));
}

// exp(-i theta Sx) psi for spin-1, closed form (Sx^3 = Sx)
inline void apply_sx_rotation(ComplexVector& psi, double theta) {
  const double s = std::sin(theta), c = std::cos(theta);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const complexd x = psi[0], y = psi[1], z = psi[2];
  const complexd xz = x + z;
  psi[0] = x - complexd(0, s) * y * inv_sqrt2 + 0.5 * (c - 1.0) * xz;
  psi[1] = c * y - complexd(0, s) * xz * inv_sqrt2;
  psi[2] = z - complexd(0, s) * y * inv_sqrt2 + 0.5 * (c - 1.0) * xz;
}

// Per-trajectory propagation engine. Shared read-only setup lives here; the
// mutable per-trajectory state is local to run().
class Propagator {
public:
  explicit Propagator(const SimulationSpec& spec) : spec_(spec) {
    spec.validate();
    d_ = spec.dim();
    if (spec.lab_frame) {
      const NVParams& p = *spec.nv;
      h_diag_.resize(3);
      ComplexMatrix hnv = nv_hamiltonian(p);
      for (int m = 0; m < 3; ++m) h_diag_[m] = hnv(m, m).real();
      weights_ = {1.0, 0.0, -1.0};
      frame_ = {p.omega1, 0.0, p.omega2};
      drive_bound_ = p.gamma * (p.B1 + p.B2) * std::sqrt(2.0);
    } else {
      weights_ = spec.model.dephase_weights;
      hs_diagonal_ = spec.model.hamiltonian_is_diagonal();
      if (hs_diagonal_) {
        h_diag_ = spec.model.eps;
      } else {
        h_full_ = spec.model.hamiltonian();
      }
    }
  }

  // sink(point_index, psi_in_record_frame, wall_time)
  using Sink =
      std::function<void(long, const ComplexVector&, double)>;

  void run(long trajectory_index, const Sink& sink) const {
    Rng rng(derive_seed(spec_.master_seed, trajectory_index));
    std::optional<OuStepper> ou;
    double b = 0.0;
    bool b_static = true;
    if (const auto* sg = std::get_if<StaticGaussian>(&spec_.noise)) {
      b = sg->sigma_b * rng.normal();
    } else if (const auto* om = std::get_if<OrnsteinUhlenbeck>(&spec_.noise)) {
      ou.emplace(*om, rng);
      b = ou->value();
      b_static = false;
    }

    ComplexVector psi = spec_.initial_state;
    double t_wall = 0.0;

    // Per-segment propagators reused across cycles whenever b is static:
    // diagonal evolutions cache their phase vectors, the rest cache the full
    // unitary. Driven lab-frame segments stay uncached (drive phase depends
    // on absolute time).
    const auto& cycle = spec_.schedule.cycle;
    enum { none, phases, matrix };
    std::vector<int> kind(cycle.size(), none);
    std::vector<ComplexVector> phase_cache(cycle.size());
    std::vector<ComplexMatrix> mat_cache(cycle.size());
    if (b_static) {
      for (size_t k = 0; k < cycle.size(); ++k) {
        const auto* seg = std::get_if<Segment>(&cycle[k]);
        if (seg == nullptr || seg->duration <= 0.0) continue;
        if (spec_.lab_frame) {
          if (!drive_active(*seg)) {
            phase_cache[k] = diag_phases(*seg, b);
            kind[k] = phases;
          }
        } else if (hs_diagonal_) {
          phase_cache[k] = diag_phases(*seg, b);
          kind[k] = phases;
        } else {
          mat_cache[k] = segment_unitary(*seg, b);
          kind[k] = matrix;
        }
      }
    }

    auto apply_event = [&](const CycleEvent& ev, int cache_kind, size_t k) {
      if (const auto* seg = std::get_if<Segment>(&ev)) {
        if (seg->duration > 0.0) {
          if (cache_kind == phases)
            psi.array() *= phase_cache[k].array();
          else if (cache_kind == matrix)
            psi = mat_cache[k] * psi;
          else
            apply_segment(psi, *seg, b, t_wall);
          t_wall += seg->duration;
          if (ou) b = ou->advance(seg->duration);
        }
      } else {
        const auto& g = std::get<GateEvent>(ev);
        std::swap(psi[g.i], psi[g.j]);
      }
    };

    for (const auto& ev : spec_.prep) apply_event(ev, none, 0);

    auto record = [&](long point) {
      if (spec_.lab_frame) {
        ComplexVector rot = psi;
        for (int m = 0; m < 3; ++m) rot[m] *= cis(frame_[m] * t_wall);
        sink(point, rot, t_wall);
      } else {
        sink(point, psi, t_wall);
      }
    };

    record(0);
    long point = 1;
    for (long cyc = 1; cyc <= spec_.schedule.repeats; ++cyc) {
      for (size_t k = 0; k < cycle.size(); ++k)
        apply_event(cycle[k], kind[k], k);
      if (cyc % spec_.sample_stride == 0) record(point++);
    }
  }

private:
  bool drive_active(const Segment& seg) const {
    return seg.system_on && (spec_.nv->B1 > 0.0 || spec_.nv->B2 > 0.0);
  }

  // phase factors of a purely diagonal segment evolution; in the lab frame
  // the static NV terms act regardless of the system flag
  ComplexVector diag_phases(const Segment& seg, double b) const {
    ComplexVector ph(d_);
    for (int m = 0; m < d_; ++m) {
      double e = b * weights_[m];
      if (spec_.lab_frame || seg.system_on) e += h_diag_[m];
      ph[m] = cis(-e * seg.duration);
    }
    return ph;
  }

  ComplexMatrix segment_unitary(const Segment& seg, double b) const {
    ComplexMatrix h = coupling_operator(spec_.model, b);
    if (seg.system_on) h += h_full_;
    return expm_hermitian(h, seg.duration).m;
  }

  void apply_segment(ComplexVector& psi, const Segment& seg, double b,
                     double t_wall) const {
    if (spec_.lab_frame) {
      apply_lab_segment(psi, seg, b, t_wall);
      return;
    }
    if (hs_diagonal_) {
      for (int m = 0; m < d_; ++m) {
        double e = b * weights_[m];
        if (seg.system_on) e += h_diag_[m];
        psi[m] *= cis(-e * seg.duration);
      }
      return;
    }
    ComplexMatrix u = segment_unitary(seg, b);
    psi = u * psi;
  }

  void apply_lab_segment(ComplexVector& psi, const Segment& seg, double b,
                         double t_wall) const {
    const NVParams& p = *spec_.nv;
    if (!drive_active(seg)) {
      // static diagonal Hamiltonian: exact single step
      for (int m = 0; m < 3; ++m)
        psi[m] *= cis(-(h_diag_[m] + b * weights_[m]) * seg.duration);
      return;
    }
    double h_norm = 0.0;
    for (int m = 0; m < 3; ++m)
      h_norm = std::max(h_norm, std::abs(h_diag_[m] + b * weights_[m]));
    h_norm += drive_bound_;
    double h_max = spec_.substep_max_phase / h_norm;
    if (h_max < 1e-9)
      throw SubstepUnderflow("lab-frame substep below 1e-9 us");
    long n_sub = std::max<long>(1, static_cast<long>(
                                       std::ceil(seg.duration / h_max)));
    double h = seg.duration / n_sub;
    // Strang split per substep: exact diagonal phases around the drive
    // rotation evaluated at the substep midpoint.
    complexd half_phase[3];
    for (int m = 0; m < 3; ++m)
      half_phase[m] = cis(-(h_diag_[m] + b * weights_[m]) * h * 0.5);
    for (long k = 0; k < n_sub; ++k) {
      double t_mid = t_wall + (k + 0.5) * h;
      double amp = p.gamma * (p.B1 * std::cos(p.omega1 * t_mid) +
                              p.B2 * std::cos(p.omega2 * t_mid));
      for (int m = 0; m < 3; ++m) psi[m] *= half_phase[m];
      apply_sx_rotation(psi, amp * h);
      for (int m = 0; m < 3; ++m) psi[m] *= half_phase[m];
    }
  }

  const SimulationSpec& spec_;
  int d_ = 0;
  std::vector<double> h_diag_;
  std::vector<double> weights_;
  std::vector<double> frame_;
  ComplexMatrix h_full_;
  bool hs_diagonal_ = true;
  double drive_bound_ = 0.0;
};

} // namespace detail

// Single-trajectory time series of (pure-state) density matrices at the
// recorded points, in the record frame.
inline std::vector<DensityMatrix> evolve_trajectory(const SimulationSpec& spec,
                                                    long trajectory_index) {
  detail::Propagator prop(spec);
  std::vector<DensityMatrix> out(
      spec.recorded_points(),
      DensityMatrix::from_state(spec.initial_state.normalized()));
  prop.run(trajectory_index,
           [&](long point, const ComplexVector& psi, double) {
             out[point] = DensityMatrix::from_state(psi);
           });
  return out;
}

// Deterministic trajectory-parallel ensemble average. Trajectories are
// processed in fixed blocks whose partial sums are combined by a fixed-order
// pairwise tree, so the result is bit-identical for any worker count.
inline EnsembleResult run_ensemble(const SimulationSpec& spec,
                                   int workers = 0) {
  spec.validate();
  const int d = spec.dim();
  const long n_points = spec.recorded_points();
  const long n_traj = spec.trajectories;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
  const long n_pairs = static_cast<long>(pairs.size());
  // per point: 5 moment accumulators per pair + 1 per level
  const long stride_pt = 5 * n_pairs + d;
  const long buf_len = n_points * stride_pt;

  constexpr long block_size = 64;
  const long n_blocks = (n_traj + block_size - 1) / block_size;
  std::vector<std::vector<double>> blocks(n_blocks);

  detail::Propagator prop(spec);
  std::atomic<long> next_block{0};
  auto worker_fn = [&]() {
    std::vector<double> local(buf_len);
    for (;;) {
      long blk = next_block.fetch_add(1);
      if (blk >= n_blocks) return;
      std::fill(local.begin(), local.end(), 0.0);
      const long lo = blk * block_size;
      const long hi = std::min(n_traj, lo + block_size);
      for (long traj = lo; traj < hi; ++traj) {
        prop.run(traj, [&](long point, const ComplexVector& psi, double) {
          double* row = local.data() + point * stride_pt;
          for (long p = 0; p < n_pairs; ++p) {
            const complexd z = psi[pairs[p].first] *
                               std::conj(psi[pairs[p].second]);
            double* acc = row + 5 * p;
            acc[0] += z.real();
            acc[1] += z.imag();
            acc[2] += z.real() * z.real();
            acc[3] += z.imag() * z.imag();
            acc[4] += z.real() * z.imag();
          }
          for (int m = 0; m < d; ++m)
            row[5 * n_pairs + m] += std::norm(psi[m]);
        });
      }
      blocks[blk] = local;
    }
  };

  int n_workers = workers > 0
                      ? workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = static_cast<int>(
      std::min<long>(n_workers, n_blocks));
  if (n_workers <= 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }

  // fixed-order pairwise tree reduction over blocks
  std::function<std::vector<double>(long, long)> reduce =
      [&](long lo, long hi) -> std::vector<double> {
    if (hi - lo == 1) return std::move(blocks[lo]);
    long mid = lo + (hi - lo) / 2;
    std::vector<double> left = reduce(lo, mid);
    std::vector<double> right = reduce(mid, hi);
    for (long k = 0; k < buf_len; ++k) left[k] += right[k];
    return left;
  };
  std::vector<double> total = reduce(0, n_blocks);

  EnsembleResult res;
  res.trajectories = n_traj;
  res.times.resize(n_points);
  res.wall_times.resize(n_points);
  double prep_wall = 0.0;
  for (const auto& ev : spec.prep)
    if (const auto* s = std::get_if<Segment>(&ev)) prep_wall += s->duration;
  for (long k = 0; k < n_points; ++k) {
    res.times[k] = k * spec.sample_stride * spec.schedule.dt;
    res.wall_times[k] =
        prep_wall + k * spec.sample_stride * spec.schedule.cycle_wall_time();
  }
  const double n = static_cast<double>(n_traj);
  for (long p = 0; p < n_pairs; ++p) {
    CoherenceSeries cs;
    cs.i = pairs[p].first;
    cs.j = pairs[p].second;
    cs.times = res.times;
    cs.values.resize(n_points);
    cs.stderrs.resize(n_points);
    for (long k = 0; k < n_points; ++k) {
      const double* acc = total.data() + k * stride_pt + 5 * p;
      const double mr = acc[0] / n, mi = acc[1] / n;
      cs.values[k] = complexd(mr, mi);
      if (n_traj > 1) {
        const double var_r = std::max(0.0, (acc[2] - n * mr * mr) / (n - 1.0));
        const double var_i = std::max(0.0, (acc[3] - n * mi * mi) / (n - 1.0));
        const double cov = (acc[4] - n * mr * mi) / (n - 1.0);
        const double mag = std::hypot(mr, mi);
        double var_abs;
        if (mag > 1e-12) {
          const double gr = mr / mag, gi = mi / mag;
          var_abs = gr * gr * var_r + 2.0 * gr * gi * cov + gi * gi * var_i;
        } else {
          var_abs = var_r + var_i;
        }
        cs.stderrs[k] = std::sqrt(std::max(0.0, var_abs) / n);
      } else {
        cs.stderrs[k] = 0.0;
      }
    }
    res.coherences.push_back(std::move(cs));
  }
  for (int m = 0; m < d; ++m) {
    PopulationSeries ps;
    ps.level = m;
    ps.times = res.times;
    ps.values.resize(n_points);
    for (long k = 0; k < n_points; ++k)
      ps.values[k] = total[k * stride_pt + 5 * n_pairs + m] / n;
    res.populations.push_back(std::move(ps));
  }
  return res;
}

}
