#include <catch2/catch_amalgamated.hpp>

#include <qdeco/engine.hpp>
#include <qdeco/filterfn.hpp>
#include <qdeco/fitting.hpp>

#include <cmath>

using namespace qdeco;
using Catch::Approx;

namespace {

ComplexVector pair_superposition(int dim, int i, int j) {
  ComplexVector v = ComplexVector::Zero(dim);
  v[i] = v[j] = 1.0 / std::sqrt(2.0);
  return v;
}

SimulationSpec two_level_static_spec(double lambda, double sigma_b,
                                     long trajectories) {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  double t2 = 1.0 / (std::sqrt(2.0) * sigma_b * (1.0 + lambda));
  double dt = t2 / 40.0;
  long n = static_cast<long>(std::ceil(2.0 * t2 / dt));
  spec.schedule = build_amplify_schedule(lambda, dt, n, 2);
  spec.noise = StaticGaussian{sigma_b};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = trajectories;
  spec.master_seed = 20250810;
  return spec;
}

} // namespace

TEST_CASE("trajectory is constant without noise or Hamiltonian") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  spec.schedule = build_amplify_schedule(1.0, 0.01, 20, 2);
  spec.initial_state = pair_superposition(2, 0, 1);
  auto traj = evolve_trajectory(spec, 0);
  for (const auto& rho : traj) {
    CHECK(std::abs(rho.coherence(0, 1) - complexd(0.5, 0.0)) < 1e-14);
    CHECK(rho.population(0) == Approx(0.5));
  }
}

TEST_CASE("single-trajectory phase accumulates at 2 b (1+lambda)") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  const double lambda = 1.5;
  spec.schedule = build_amplify_schedule(lambda, 0.01, 50, 2);
  spec.noise = StaticGaussian{3.5216};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.master_seed = 7;

  const long traj_index = 3;
  // the trajectory's field value comes from the derived-seed contract
  Rng rng(derive_seed(spec.master_seed, traj_index));
  const double b = 3.5216 * rng.normal();

  auto traj = evolve_trajectory(spec, traj_index);
  for (size_t k = 0; k < traj.size(); ++k) {
    double t = k * spec.schedule.dt; // system time
    complexd expected =
        0.5 * std::polar(1.0, -2.0 * b * (1.0 + lambda) * t);
    CHECK(std::abs(traj[k].coherence(0, 1) - expected) < 1e-12);
    CHECK(traj[k].purity() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("ensemble decay matches the static Gaussian law within 3 stderr") {
  const double sigma_b = 3.5216;
  for (double lambda : {0.0, 1.0}) {
    auto spec = two_level_static_spec(lambda, sigma_b, 10000);
    auto res = run_ensemble(spec, 2);
    const auto& c = res.pair(0, 1);
    int checked = 0;
    for (size_t k = 0; k < c.times.size(); ++k) {
      double expected =
          0.5 * analytic_coherence(2.0 * (1.0 + lambda), sigma_b, c.times[k]);
      double tol = 3.0 * std::max(c.stderrs[k], 1e-6);
      CHECK(std::abs(std::abs(c.values[k]) - expected) < tol);
      ++checked;
    }
    CHECK(checked > 40);
  }
}

TEST_CASE("populations stay constant under pure dephasing") {
  auto spec = two_level_static_spec(0.5, 3.5216, 2000);
  auto res = run_ensemble(spec, 2);
  for (const auto& p : res.populations)
    for (double v : p.values) CHECK(v == Approx(0.5).margin(1e-12));
}

TEST_CASE("no spurious growth of dephasing-only coherences") {
  auto spec = two_level_static_spec(1.0, 3.5216, 4000);
  auto res = run_ensemble(spec, 2);
  const auto& c = res.pair(0, 1);
  double initial = std::abs(c.values[0]);
  for (size_t k = 0; k < c.values.size(); ++k)
    CHECK(std::abs(c.values[k]) <= initial + 3.0 * c.stderrs[k]);
}

TEST_CASE("ensemble mean is a valid density matrix") {
  auto spec = two_level_static_spec(1.0, 3.5216, 3000);
  auto res = run_ensemble(spec, 2);
  for (size_t k = 0; k < res.times.size(); k += 17) {
    ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
    rho(0, 0) = res.populations[0].values[k];
    rho(1, 1) = res.populations[1].values[k];
    rho(0, 1) = res.pair(0, 1).values[k];
    rho(1, 0) = std::conj(rho(0, 1));
    // validated at a looser ensemble tolerance
    CHECK(hermiticity_defect(rho) < 1e-8);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-8);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("reproducibility across worker counts is bit-exact") {
  auto spec = two_level_static_spec(0.5, 3.5216, 1024);
  auto r1 = run_ensemble(spec, 1);
  auto r4 = run_ensemble(spec, 4);
  auto r8 = run_ensemble(spec, 8);
  const auto& a = r1.pair(0, 1);
  const auto& b = r4.pair(0, 1);
  const auto& c = r8.pair(0, 1);
  for (size_t k = 0; k < a.values.size(); ++k) {
    CHECK(a.values[k] == b.values[k]);
    CHECK(a.values[k] == c.values[k]);
    CHECK(a.stderrs[k] == b.stderrs[k]);
    CHECK(a.stderrs[k] == c.stderrs[k]);
  }
}

TEST_CASE("doubling trajectories shrinks stderr by sqrt 2") {
  auto spec = two_level_static_spec(0.0, 3.5216, 20000);
  auto big = run_ensemble(spec, 2);
  spec.trajectories = 10000;
  auto small = run_ensemble(spec, 2);
  // compare at a mid-decay point
  size_t k = small.times.size() / 2;
  double ratio = small.pair(0, 1).stderrs[k] / big.pair(0, 1).stderrs[k];
  CHECK(ratio == Approx(std::sqrt(2.0)).epsilon(0.10));
}

TEST_CASE("OU free induction and filter-function cross-check") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  const double l = 2.0, R = 0.5;
  spec.schedule = build_amplify_schedule(0.0, 0.01, 100, 2);
  spec.sample_stride = 5;
  spec.noise = OrnsteinUhlenbeck{l, R};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = 20000;
  spec.master_seed = 11;
  auto res = run_ensemble(spec, 2);
  const auto& c = res.pair(0, 1);
  // weight difference 2 doubles the effective coupling
  auto chi_free = [&](double t) {
    double le = 2.0 * l;
    return (le * le) / (R * R) * (std::exp(-R * t) + R * t - 1.0);
  };
  for (size_t k = 1; k < c.times.size(); ++k) {
    double expected = 0.5 * std::exp(-chi_free(c.times[k]));
    CHECK(std::abs(std::abs(c.values[k]) - expected) <
          3.0 * std::max(c.stderrs[k], 1e-6));
  }
}

TEST_CASE("OU envelope under pulses matches exp(-chi) pointwise") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  const double l = 2.0, R = 0.5, lambda = 1.0, dt = 0.01;
  const double mu = mu_from_tau(1.0, lambda); // CPMG point
  spec.schedule = build_one_channel_schedule(lambda, mu, dt, 200, 2);
  spec.sample_stride = 10;
  spec.noise = OrnsteinUhlenbeck{l, R};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = 20000;
  spec.master_seed = 13;
  auto res = run_ensemble(spec, 2);
  const auto& c = res.pair(0, 1);
  OrnsteinUhlenbeck eff{2.0 * l, R}; // weight difference 2
  int points = 0;
  for (size_t k = 1; k < c.times.size() && points < 20; ++k, ++points) {
    long cycles = static_cast<long>(k) * spec.sample_stride;
    auto w = periodic_window_full_cycle(lambda, mu, dt, cycles);
    double expected = 0.5 * std::exp(-chi(w, eff, 60000.0).value);
    CHECK(std::abs(std::abs(c.values[k]) - expected) <
          3.0 * std::max(c.stderrs[k], 1e-6));
  }
  CHECK(points == 20);
}

TEST_CASE("fit_gaussian_decay") {
  SECTION("recovers an exact synthetic generator") {
    std::vector<double> t, v;
    for (int k = 0; k <= 60; ++k) {
      t.push_back(0.1 * k);
      v.push_back(std::exp(-std::pow(0.1 * k / 2.0, 2)));
    }
    auto fit = fit_gaussian_decay(t, v);
    CHECK(fit.t2 == Approx(2.0).margin(1e-6));
    CHECK(fit.amplitude == Approx(1.0).margin(1e-9));
    CHECK_FALSE(fit.nondecaying);
  }

  SECTION("constant series raises the nondecaying flag") {
    std::vector<double> t, v;
    for (int k = 0; k <= 20; ++k) {
      t.push_back(0.1 * k);
      v.push_back(0.5);
    }
    auto fit = fit_gaussian_decay(t, v);
    CHECK(fit.nondecaying);
    CHECK(std::isinf(fit.t2));
  }

  SECTION("too few points above the floor") {
    std::vector<double> t{0.0, 1.0, 2.0, 3.0}, v{1.0, 0.5, 0.2, 0.1};
    CHECK_THROWS_AS(fit_gaussian_decay(t, v), InsufficientData);
  }

  SECTION("MC ensemble at lambda = 0 reproduces the quoted T2") {
    auto spec = two_level_static_spec(0.0, 3.5216, 10000);
    auto res = run_ensemble(spec, 2);
    auto fit = fit_gaussian_decay(res.pair(0, 1));
    CHECK(fit.t2 == Approx(0.2008).epsilon(0.03));
  }
}

TEST_CASE("MC-vs-analytic grid for the one-channel family") {
  const double sigma_b = 3.5216;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double tau : {0.0, 0.5, 1.0}) {
      double mu = mu_from_tau(tau, lambda);
      SimulationSpec spec;
      spec.model = two_level_model("pm1");
      double c = 2.0 * (1.0 + lambda - 2.0 * mu);
      double t2 = analytic_t2(c, sigma_b);
      double dt = t2 / 50.0;
      spec.schedule =
          build_one_channel_schedule(lambda, mu, dt,
                                     static_cast<long>(2.0 * t2 / dt), 2);
      spec.noise = StaticGaussian{sigma_b};
      spec.initial_state = pair_superposition(2, 0, 1);
      spec.trajectories = 12000;
      spec.master_seed = 1000 + static_cast<std::uint64_t>(10 * lambda);
      auto res = run_ensemble(spec, 2);
      auto fit = fit_gaussian_decay(res.pair(0, 1), 0.1);
      double tol = std::max(0.03 * t2, 3.0 * fit.t2_stderr);
      CHECK(std::abs(fit.t2 - t2) < tol);
    }
  }
}

TEST_CASE("sweep over lambda") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  spec.schedule = build_amplify_schedule(0.0, 0.005, 100, 2);
  spec.noise = StaticGaussian{3.5216};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = 4000;
  spec.master_seed = 99;
  SweepOptions opt;
  opt.workers = 2;
  auto result = sweep(spec, "lambda", {0.0, 1.0, 3.0}, opt);
  REQUIRE(result.rows.size() == 3);
  double t2_0 = result.rows[0].cells[0].fit.t2;
  for (size_t r = 0; r < result.rows.size(); ++r) {
    const auto& cell = result.rows[r].cells[0];
    CHECK(result.rows[r].feasible);
    CHECK(cell.fit.t2 == Approx(cell.analytic).epsilon(0.05));
    double expected_ratio = 1.0 + result.rows[r].value;
    CHECK(t2_0 / cell.fit.t2 == Approx(expected_ratio).epsilon(0.05));
  }
}

TEST_CASE("single-value sweep equals a single run") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  spec.schedule = build_one_channel_schedule(1.0, 0.25, 0.005, 100, 2);
  spec.noise = StaticGaussian{3.5216};
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = 3000;
  spec.master_seed = 4242;
  SweepOptions opt;
  opt.workers = 2;
  auto result = sweep(spec, "mu", {0.25}, opt);
  REQUIRE(result.rows.size() == 1);

  SimulationSpec direct = spec;
  autoscale_horizon(direct, 3.5216, opt);
  auto res = run_ensemble(direct, 2);
  auto fit = fit_gaussian_decay(res.pair(0, 1));
  CHECK(result.rows[0].cells[0].fit.t2 == fit.t2);
}

TEST_CASE("infeasible two-channel sweep points carry analytic values only") {
  SimulationSpec spec;
  spec.model = effective_qudit_model(NVParams{});
  spec.model.eps = {0.0, 0.0, 0.0};
  spec.model.J = Eigen::MatrixXd::Zero(3, 3);
  spec.schedule = build_two_channel_schedule(1.0, 0.2, 0.6, 0.005, 100);
  spec.noise = StaticGaussian{3.5216};
  spec.initial_state = pair_superposition(3, 0, 1);
  spec.trajectories = 500;
  spec.master_seed = 5;
  SweepOptions opt;
  opt.workers = 2;
  // sweeping mu1 past mu2 = 0.6 crosses into the infeasible region
  auto result = sweep(spec, "mu1", {0.2, 0.9}, opt);
  CHECK(result.rows[0].feasible);
  CHECK_FALSE(result.rows[1].feasible);
  REQUIRE(result.rows[1].cells.size() == 3);
  auto c = two_channel_coefficients(1.0, 0.9, 0.6);
  CHECK(result.rows[1].cells[0].analytic ==
        Approx(analytic_t2(c.c12, 3.5216)));
  CHECK(std::isnan(result.rows[1].cells[0].fit.t2));
}

TEST_CASE("lab-frame Rabi oscillation against the rotating-frame model") {
  NVParams p;
  p.Bz = 100.0;
  p.B1 = 1.717;
  p.omega1 = p.D + p.gamma * p.Bz; // resonant
  p.omega2 = p.D - p.gamma * p.Bz;

  SimulationSpec spec;
  spec.lab_frame = true;
  spec.nv = p;
  const double j12 = p.gamma * p.B1 / (2.0 * std::sqrt(2.0));
  const double period = 2.0 * M_PI / (2.0 * j12);
  const double dt = period / 400.0;
  spec.schedule = build_amplify_schedule(0.0, dt, 440, 3);
  spec.initial_state = ComplexVector::Zero(3);
  spec.initial_state[1] = 1.0; // m = 0
  spec.trajectories = 1;
  auto res = run_ensemble(spec, 1);

  // population transferred into m = +1 returns to its maximum after one
  // Rabi period; locate the first return to the initial-state population
  const auto& p0 = res.populations[1];
  size_t k_min = 0;
  for (size_t k = 1; k < p0.values.size(); ++k)
    if (p0.values[k] < p0.values[k_min]) k_min = k;
  // full period = twice the half-period at the population minimum
  double measured = 2.0 * p0.times[k_min];
  CHECK(measured == Approx(period).epsilon(0.02));

  // rotating-frame model comparison, same protocol
  SimulationSpec rwa = spec;
  rwa.lab_frame = false;
  rwa.nv.reset();
  rwa.model = effective_qudit_model(p);
  auto res2 = run_ensemble(rwa, 1);
  for (size_t k = 0; k < res.times.size(); k += 20) {
    for (int m = 0; m < 3; ++m)
      CHECK(res.populations[m].values[k] ==
            Approx(res2.populations[m].values[k]).margin(0.02));
  }
}

TEST_CASE("lab-frame integration matches the rotating-wave model with both "
          "drives on resonance") {
  NVParams p;
  p.Bz = 100.0;
  p.B1 = 1.717; // gamma B1 well below 0.01 D
  p.B2 = 1.0;
  p.omega1 = p.D + p.gamma * p.Bz;
  p.omega2 = p.D - p.gamma * p.Bz;
  REQUIRE(p.gamma * p.B1 <= 0.01 * p.D);

  SimulationSpec lab;
  lab.lab_frame = true;
  lab.nv = p;
  const double j12 = p.gamma * p.B1 / (2.0 * std::sqrt(2.0));
  const double horizon = 2.0 * M_PI / (2.0 * j12); // one Rabi period
  lab.schedule = build_amplify_schedule(0.0, horizon / 200.0, 200, 3);
  lab.initial_state = ComplexVector::Zero(3);
  lab.initial_state[1] = 1.0;
  lab.trajectories = 1;
  auto res_lab = run_ensemble(lab, 1);

  SimulationSpec rwa = lab;
  rwa.lab_frame = false;
  rwa.nv.reset();
  rwa.model = effective_qudit_model(p);
  auto res_rwa = run_ensemble(rwa, 1);

  double worst = 0.0;
  for (size_t k = 0; k < res_lab.times.size(); ++k)
    for (int m = 0; m < 3; ++m)
      worst = std::max(worst, std::abs(res_lab.populations[m].values[k] -
                                       res_rwa.populations[m].values[k]));
  CHECK(worst < 0.02);
}

TEST_CASE("lab-frame substep underflow is reported") {
  NVParams p;
  p.Bz = 100.0;
  p.B1 = 1.717;
  p.omega1 = p.D + p.gamma * p.Bz;
  SimulationSpec spec;
  spec.lab_frame = true;
  spec.nv = p;
  spec.schedule = build_amplify_schedule(0.0, 0.001, 2, 3);
  spec.initial_state = ComplexVector::Zero(3);
  spec.initial_state[1] = 1.0;
  spec.trajectories = 1;
  spec.substep_max_phase = 1e-12;
  CHECK_THROWS_AS(evolve_trajectory(spec, 0), SubstepUnderflow);
}

TEST_CASE("spec validation names the problem") {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  spec.schedule = build_amplify_schedule(1.0, 0.01, 10, 2);
  spec.initial_state = pair_superposition(2, 0, 1);
  spec.trajectories = 0;
  CHECK_THROWS_AS(run_ensemble(spec, 1), InvalidParam);
  spec.trajectories = 10;
  spec.initial_state *= 2.0;
  CHECK_THROWS_AS(run_ensemble(spec, 1), InvalidParam);
  spec.initial_state = ComplexVector::Ones(3) / std::sqrt(3.0);
  CHECK_THROWS_AS(run_ensemble(spec, 1), DimensionMismatch);
}
