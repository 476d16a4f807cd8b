#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "qdeco/config.hpp"

// Desk-scale experiment presets and the config-file dispatcher.
namespace qdeco::presets {

namespace fs = std::filesystem;
using io::json;

struct PresetOptions {
  std::string out_dir = ".";
  std::string format = "csv";
  long trajectories = 0;  // 0 keeps the preset default
  std::uint64_t seed = 0; // 0 keeps the preset default
  int workers = 0;
  long grid_points = 0;   // 0 keeps the preset default grid density
};

inline constexpr std::uint64_t default_seed = 20250810;

struct PresetResult {
  std::vector<std::string> files;
  io::json params;
};
inline const std::vector<double> lambda_grid{0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0};
inline constexpr double sigma_b_gauss = 0.2;

namespace detail {

inline double sigma_b() { return sigma_b_gauss * gamma_e; }

// dephasing curve spec shared by fig1a and fig2a so that the tau = 0 curve
// of the latter is bit-identical to the former at matching lambda
inline SimulationSpec dephasing_curve_spec(double lambda, double mu,
                                           bool with_gates, long trajectories,
                                           std::uint64_t seed) {
  SimulationSpec spec;
  spec.model = two_level_model("pm1");
  const double t2 = analytic_t2(2.0 * (1.0 + lambda), sigma_b());
  const double dt = t2 / 50.0;
  const long n = static_cast<long>(std::ceil(2.0 * t2 / dt));
  spec.schedule = with_gates
                      ? build_one_channel_schedule(lambda, mu, dt, n, 2)
                      : build_amplify_schedule(lambda, dt, n, 2);
  spec.noise = StaticGaussian{sigma_b()};
  spec.initial_state = ComplexVector::Zero(2);
  spec.initial_state[0] = spec.initial_state[1] = 1.0 / std::sqrt(2.0);
  spec.trajectories = trajectories;
  spec.master_seed = seed;
  return spec;
}

inline NVParams fig1cd_nv(double lambda) {
  NVParams p;
  p.Bz = 100.0;
  p.B1 = 1.717;
  p.omega1 = p.D + p.gamma * p.Bz - mhz_to_rad_per_us(1.9 / (1.0 + lambda));
  p.omega2 = p.D - p.gamma * p.Bz;
  return p;
}

inline json preset_meta(const std::string& name, const json& params,
                        std::uint64_t seed, long trajectories) {
  json m;
  m["preset"] = name;
  m["version"] = QDECO_VERSION;
  m["master_seed"] = seed;
  m["trajectories"] = trajectories;
  m["parameters"] = params;
  return m;
}

inline void write_manifest(const fs::path& dir, const std::string& name,
                           const json& meta, double runtime_s,
                           const std::vector<std::string>& outputs,
                           int workers) {
  json m = meta;
  m["runtime_seconds"] = runtime_s;
  m["workers"] = workers;
  m["outputs"] = outputs;
  io::write_json_file(dir / (name + "_manifest.json"), m);
}

// ideal pi/2 readout rotation on the (+1, 0) channel applied to the mean
// density matrix; returns the populations after the rotation
inline std::array<double, 3> ramsey_readout(const ComplexMatrix& rho) {
  static const ComplexMatrix r = [] {
    ComplexMatrix m = ComplexMatrix::Identity(3, 3);
    const double c = std::cos(M_PI / 4.0);
    m(0, 0) = m(1, 1) = c;
    m(0, 1) = m(1, 0) = complexd(0.0, -c);
    return m;
  }();
  ComplexMatrix after = r * rho * r.adjoint();
  return {after(0, 0).real(), after(1, 1).real(), after(2, 2).real()};
}

inline ComplexMatrix mean_density(const EnsembleResult& res, size_t k,
                                  int dim) {
  ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) rho(m, m) = res.populations[m].values[k];
  for (const auto& c : res.coherences) {
    rho(c.i, c.j) = c.values[k];
    rho(c.j, c.i) = std::conj(c.values[k]);
  }
  return rho;
}

} // namespace detail

// Ramsey-style driven-model run: a pi/2 microwave pulse prepares the
// coherence, then the system evolves freely with the decoupling-window
// amplification while the detuning keeps acting (the static NV terms are not
// gateable). The 1.9 MHz / (1 + lambda) detuning rule then yields fringes at
// a lambda-independent frequency.
inline SimulationSpec fig1cd_spec(double lambda, long trajectories,
                                  std::uint64_t seed) {
  SimulationSpec spec;
  spec.lab_frame = true;
  spec.nv = detail::fig1cd_nv(lambda);
  const double j12 = spec.nv->gamma * spec.nv->B1 / (2.0 * std::sqrt(2.0));
  const double t_pulse = M_PI / (4.0 * j12);
  spec.prep = {Segment{t_pulse, true}};
  // free evolution: drive off everywhere; lambda windows stretch wall time
  const double t2 = std::sqrt(2.0) / (detail::sigma_b() * (1.0 + lambda));
  const double dt = t2 / 45.0;
  const long n = static_cast<long>(std::ceil(2.0 * t2 / dt));
  PulseSchedule sched;
  sched.dim = 3;
  sched.dt = dt;
  sched.repeats = n;
  sched.kind = ScheduleKind::custom;
  sched.params["lambda"] = lambda;
  sched.cycle = {Segment{dt, false}, Segment{lambda * dt, false}};
  spec.schedule = sched;
  spec.initial_state = ComplexVector::Zero(3);
  spec.initial_state[1] = 1.0; // m = 0
  spec.trajectories = trajectories;
  spec.master_seed = seed;
  return spec;
}

inline PresetResult run_fig1a(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 10000;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  json params{{"sigma_b_gauss", sigma_b_gauss}, {"lambda_grid", lambda_grid}};
  json meta = detail::preset_meta("fig1a", params, seed, traj);
  fs::path f = fs::path(opt.out_dir) / "fig1a_coherence.csv";
  io::CsvWriter w(f);
  w.meta(meta);
  w.header({"lambda", "time_us", "re_rho_12", "im_rho_12", "abs_rho_12",
            "stderr_12", "analytic_abs_rho_12"});
  for (double lambda : lambda_grid) {
    auto spec = detail::dephasing_curve_spec(lambda, 0.0, false, traj, seed);
    auto res = run_ensemble(spec, opt.workers);
    const auto& c = res.pair(0, 1);
    for (size_t k = 0; k < c.times.size(); ++k) {
      double analytic = 0.5 * analytic_coherence(2.0 * (1.0 + lambda),
                                                 detail::sigma_b(),
                                                 c.times[k]);
      w.row({lambda, c.times[k], c.values[k].real(), c.values[k].imag(),
             std::abs(c.values[k]), c.stderrs[k], analytic});
    }
  }
  return {{f.string()}, params};
}

inline PresetResult run_fig1b(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 10000;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  json params{{"sigma_b_gauss", sigma_b_gauss}, {"lambda_grid", lambda_grid}};
  json meta = detail::preset_meta("fig1b", params, seed, traj);
  fs::path f = fs::path(opt.out_dir) / "fig1b_t2_vs_lambda.csv";
  io::CsvWriter w(f);
  w.meta(meta);
  w.header({"lambda", "t2_fit_us", "t2_err_us", "t2_analytic_us",
            "ratio_t2_0_over_t2", "ratio_expected"});
  double t2_0 = 0.0;
  std::vector<std::vector<double>> rows;
  for (double lambda : lambda_grid) {
    auto spec = detail::dephasing_curve_spec(lambda, 0.0, false, traj, seed);
    auto res = run_ensemble(spec, opt.workers);
    auto fit = fit_gaussian_decay(res.pair(0, 1));
    double analytic = analytic_t2(2.0 * (1.0 + lambda), detail::sigma_b());
    if (lambda == 0.0) t2_0 = fit.t2;
    rows.push_back({lambda, fit.t2, fit.t2_stderr, analytic, 0.0,
                    1.0 + lambda});
  }
  for (auto& r : rows) {
    r[4] = t2_0 / r[1];
    w.row(r);
  }
  return {{f.string()}, params};
}

inline PresetResult run_fig1cd(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 3000;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  json params{{"Bz_gauss", 100.0},
              {"D_ghz", 2.87},
              {"B1_gauss", 1.717},
              {"detuning_mhz_rule", "1.9/(1+lambda)"},
              {"sigma_b_gauss", sigma_b_gauss},
              {"lambda_grid", lambda_grid}};
  json meta = detail::preset_meta("fig1cd", params, seed, traj);
  fs::path fc = fs::path(opt.out_dir) / "fig1cd_evolution.csv";
  fs::path fd = fs::path(opt.out_dir) / "fig1cd_t2_vs_lambda.csv";
  io::CsvWriter wc(fc);
  wc.meta(meta);
  wc.header({"lambda", "time_us", "wall_time_us", "pop_p1", "pop_0", "pop_m1",
             "ramsey_pop_0", "abs_rho_12", "stderr_12"});
  io::CsvWriter wd(fd);
  wd.meta(meta);
  wd.header({"lambda", "t2_fit_us", "t2_err_us", "t2_ratio_law_us"});
  double t2_0 = 0.0;
  for (double lambda : lambda_grid) {
    SimulationSpec spec = fig1cd_spec(lambda, traj, seed);
    spec.noise = StaticGaussian{detail::sigma_b()};
    auto res = run_ensemble(spec, opt.workers);
    const auto& c12 = res.pair(0, 1);
    for (size_t k = 0; k < res.times.size(); ++k) {
      auto fringe = detail::ramsey_readout(detail::mean_density(res, k, 3));
      wc.row({lambda, res.times[k], res.wall_times[k],
              res.populations[0].values[k], res.populations[1].values[k],
              res.populations[2].values[k], fringe[1],
              std::abs(c12.values[k]), c12.stderrs[k]});
    }
    auto fit = fit_gaussian_decay(c12);
    if (lambda == 0.0) t2_0 = fit.t2;
    wd.row({lambda, fit.t2, fit.t2_stderr, t2_0 / (1.0 + lambda)});
  }
  return {{fc.string(), fd.string()}, params};
}

inline PresetResult run_fig2ab(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 8000;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  const double lambda = 1.0;
  const std::vector<double> tau_curves{0.0, 0.25, 0.5, 0.75, 1.0};
  json params{{"sigma_b_gauss", sigma_b_gauss},
              {"lambda", lambda},
              {"tau_curves", tau_curves}};
  json meta = detail::preset_meta("fig2ab", params, seed, traj);
  fs::path fa = fs::path(opt.out_dir) / "fig2a_coherence.csv";
  io::CsvWriter wa(fa);
  wa.meta(meta);
  wa.header({"tau", "time_us", "re_rho_12", "im_rho_12", "abs_rho_12",
             "stderr_12", "analytic_abs_rho_12"});
  for (double tau : tau_curves) {
    const double mu = mu_from_tau(tau, lambda);
    auto spec = detail::dephasing_curve_spec(lambda, mu, tau > 0.0, traj, seed);
    auto res = run_ensemble(spec, opt.workers);
    const auto& c = res.pair(0, 1);
    const double coeff = 2.0 * (1.0 + lambda - 2.0 * mu);
    for (size_t k = 0; k < c.times.size(); ++k) {
      double analytic =
          0.5 * analytic_coherence(coeff, detail::sigma_b(), c.times[k]);
      wa.row({tau, c.times[k], c.values[k].real(), c.values[k].imag(),
              std::abs(c.values[k]), c.stderrs[k], analytic});
    }
  }

  // (b): T2 against tau on a denser grid
  const long points = opt.grid_points > 0 ? opt.grid_points : 11;
  std::vector<double> tau_grid;
  for (long k = 0; k < points; ++k)
    tau_grid.push_back(static_cast<double>(k) / (points - 1));
  SimulationSpec tmpl =
      detail::dephasing_curve_spec(lambda, 0.25 * lambda, true, traj, seed);
  SweepOptions sopt;
  sopt.workers = opt.workers;
  auto sw = sweep(tmpl, "tau", tau_grid, sopt);
  fs::path fb = fs::path(opt.out_dir) / "fig2b_t2_vs_tau.csv";
  io::write_sweep_csv(fb, sw, meta);
  return {{fa.string(), fb.string()}, params};
}

inline PresetResult run_fig2cd(const PresetOptions& opt) {
  const double lambda = 1.0, dt = 0.01;
  const long periods = 8;
  const OrnsteinUhlenbeck noise{2.0, 1.0}; // chosen desk-scale bath
  const std::vector<double> tau_curves{0.0, 0.5, 1.0};
  json params{{"lambda", lambda},
              {"dt_us", dt},
              {"periods", periods},
              {"l_rad_per_us", noise.l},
              {"R_per_us", noise.R},
              {"tau_curves", tau_curves},
              {"window", "decoupling_only"}};
  json meta =
      detail::preset_meta("fig2cd", params, opt.seed ? opt.seed : default_seed,
                          0);
  const double delta = lambda * dt;

  fs::path fc = fs::path(opt.out_dir) / "fig2c_filter.csv";
  io::CsvWriter wc(fc);
  wc.meta(meta);
  wc.header({"tau", "omega_rad_per_us", "ft_sq_us2", "spectral_density"});
  const long n_omega = opt.grid_points > 0 ? opt.grid_points : 400;
  for (double tau : tau_curves) {
    auto w = periodic_window_decoupling_only(lambda, mu_from_tau(tau, lambda),
                                             dt, periods);
    for (long k = 1; k <= n_omega; ++k) {
      double omega = 3.0 * two_pi / delta * k / n_omega;
      wc.row({tau, omega, filter_ft_sq_closed(w, omega),
              noise.spectral_density(omega)});
    }
  }

  fs::path fd = fs::path(opt.out_dir) / "fig2d_envelope.csv";
  io::CsvWriter wd(fd);
  wd.meta(meta);
  wd.header({"tau", "time_us", "chi", "envelope"});
  const long m_max = 100;
  const double omega_max = default_omega_max(noise, delta);
  for (double tau : tau_curves) {
    const double mu = mu_from_tau(tau, lambda);
    for (long m = 4; m <= m_max; m += 4) {
      auto w = periodic_window_decoupling_only(lambda, mu, dt, m);
      auto r = chi(w, noise, omega_max, 1e-6);
      wd.row({tau, w.total_time(), r.value, std::exp(-r.value)});
    }
  }
  return {{fc.string(), fd.string()}, params};
}

inline PresetResult run_fig3a(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 4000;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  const double lambda = 1.0;
  const long points = opt.grid_points > 0 ? opt.grid_points : 21;
  json params{{"sigma_b_gauss", sigma_b_gauss},
              {"lambda", lambda},
              {"tau_range", json::array({0.0, 2.0})}};
  json meta = detail::preset_meta("fig3a", params, seed, traj);

  SimulationSpec tmpl;
  QuditModel m;
  m.dim = 3;
  m.eps = {0.0, 0.0, 0.0};
  m.J = Eigen::MatrixXd::Zero(3, 3);
  m.dephase_weights = {1.0, 0.0, -1.0};
  tmpl.model = m;
  tmpl.schedule = build_one_channel_schedule(lambda, 0.0, 0.002, 100, 3);
  tmpl.noise = StaticGaussian{detail::sigma_b()};
  tmpl.initial_state = ComplexVector::Ones(3) / std::sqrt(3.0);
  tmpl.trajectories = traj;
  tmpl.master_seed = seed;

  std::vector<double> tau_grid;
  for (long k = 0; k < points; ++k)
    tau_grid.push_back(2.0 * static_cast<double>(k) / (points - 1));
  SweepOptions sopt;
  sopt.workers = opt.workers;
  auto sw = sweep(tmpl, "tau", tau_grid, sopt);
  fs::path f = fs::path(opt.out_dir) / "fig3a_t2_vs_tau.csv";
  io::write_sweep_csv(f, sw, meta);
  return {{f.string()}, params};
}

inline PresetResult run_fig3bcd(const PresetOptions& opt) {
  const long traj = opt.trajectories > 0 ? opt.trajectories : 800;
  const std::uint64_t seed = opt.seed ? opt.seed : default_seed;
  const double lambda = 1.0;
  const long points = opt.grid_points > 0 ? opt.grid_points : 21;
  json params{{"sigma_b_gauss", sigma_b_gauss},
              {"lambda", lambda},
              {"tau_range", json::array({0.0, 2.0})},
              {"grid", points}};
  json meta = detail::preset_meta("fig3bcd", params, seed, traj);

  const char* names[3] = {"fig3b_t2_map_12.csv", "fig3c_t2_map_13.csv",
                          "fig3d_t2_map_23.csv"};
  std::vector<std::string> files;
  std::vector<io::CsvWriter> writers;
  writers.reserve(3);
  for (int p = 0; p < 3; ++p) {
    fs::path f = fs::path(opt.out_dir) / names[p];
    files.push_back(f.string());
    writers.emplace_back(f);
    writers[p].meta(meta);
    writers[p].header(
        {"tau1", "tau2", "t2_fit_us", "t2_err_us", "t2_analytic_us",
         "feasible"});
  }

  SweepOptions sopt;
  sopt.workers = opt.workers;
  sopt.max_points = 200;
  sopt.target_points = 50;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (long a = 0; a < points; ++a) {
    const double tau1 = 2.0 * static_cast<double>(a) / (points - 1);
    for (long b = 0; b < points; ++b) {
      const double tau2 = 2.0 * static_cast<double>(b) / (points - 1);
      const double mu1 = mu_from_tau(tau1, lambda);
      const double mu2 = mu_from_tau(tau2, lambda);
      auto c = two_channel_coefficients(lambda, mu1, mu2);
      const double cs[3] = {c.c12, c.c13, c.c23};
      const bool feasible = mu1 <= mu2;
      T2Fit fits[3]{};
      if (feasible) {
        SimulationSpec spec;
        QuditModel m;
        m.dim = 3;
        m.eps = {0.0, 0.0, 0.0};
        m.J = Eigen::MatrixXd::Zero(3, 3);
        m.dephase_weights = {1.0, 0.0, -1.0};
        spec.model = m;
        spec.schedule =
            build_two_channel_schedule(lambda, mu1, mu2, 0.002, 100);
        spec.noise = StaticGaussian{detail::sigma_b()};
        spec.initial_state = ComplexVector::Ones(3) / std::sqrt(3.0);
        spec.trajectories = traj;
        spec.master_seed = seed;
        autoscale_horizon(spec, detail::sigma_b(), sopt);
        auto res = run_ensemble(spec, opt.workers);
        const std::pair<int, int> pairs[3] = {{0, 1}, {0, 2}, {1, 2}};
        for (int p = 0; p < 3; ++p) {
          try {
            fits[p] = fit_gaussian_decay(res.pair(pairs[p].first,
                                                  pairs[p].second));
          } catch (const InsufficientData&) {
            fits[p].t2 = nan;
          }
        }
      } else {
        for (auto& f : fits) f.t2 = nan;
      }
      for (int p = 0; p < 3; ++p)
        writers[p].row({tau1, tau2, fits[p].t2, fits[p].t2_stderr,
                        analytic_t2(cs[p], detail::sigma_b()),
                        feasible ? 1.0 : 0.0});
    }
  }
  return {files, params};
}

inline std::vector<std::string> run_preset(const std::string& name,
                                           const PresetOptions& opt) {
  auto started = std::chrono::steady_clock::now();
  PresetResult result;
  if (name == "fig1a")
    result = run_fig1a(opt);
  else if (name == "fig1b")
    result = run_fig1b(opt);
  else if (name == "fig1cd")
    result = run_fig1cd(opt);
  else if (name == "fig2ab")
    result = run_fig2ab(opt);
  else if (name == "fig2cd")
    result = run_fig2cd(opt);
  else if (name == "fig3a")
    result = run_fig3a(opt);
  else if (name == "fig3bcd")
    result = run_fig3bcd(opt);
  else
    throw UnknownPreset("unknown preset '" + name + "'");
  double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  json meta = detail::preset_meta(
      name, result.params, opt.seed ? opt.seed : default_seed,
      opt.trajectories);
  detail::write_manifest(opt.out_dir, name, meta, runtime, result.files,
                         opt.workers);
  auto files = result.files;
  files.push_back((fs::path(opt.out_dir) / (name + "_manifest.json")).string());
  return files;
}

// ---------------------------------------------------------------------------
// config-file dispatch

struct RunOutput {
  std::vector<std::string> files;
};

inline RunOutput run_config(const ExperimentConfig& cfg) {
  auto started = std::chrono::steady_clock::now();
  RunOutput out;
  fs::path dir(cfg.out_dir);
  json meta = spec_meta(cfg);

  if (cfg.mode == "preset") {
    PresetOptions opt;
    opt.out_dir = cfg.out_dir;
    opt.format = cfg.format;
    opt.workers = cfg.workers;
    out.files = run_preset(cfg.preset, opt);
    return out;
  }

  if (cfg.mode == "simulate") {
    auto res = run_ensemble(cfg.spec, cfg.workers);
    if (cfg.format == "json") {
      fs::path f = dir / (cfg.prefix + "_series.json");
      io::write_json_file(f, io::series_json(res, meta));
      out.files.push_back(f.string());
    } else {
      fs::path f = dir / (cfg.prefix + "_series.csv");
      io::write_series_csv(f, res, cfg.spec.dim(), meta);
      out.files.push_back(f.string());
    }
    if (cfg.dump_noise_paths > 0) {
      const auto* ou = std::get_if<OrnsteinUhlenbeck>(&cfg.spec.noise);
      if (ou == nullptr)
        throw ConfigError("dump_noise_paths", "requires ou noise");
      for (long k = 0; k < cfg.dump_noise_paths; ++k) {
        auto path = sample_ou_path(*ou, 0.0, cfg.spec.schedule.dt,
                                   static_cast<int>(cfg.spec.schedule.repeats) + 1,
                                   derive_seed(cfg.spec.master_seed, k));
        fs::path f = dir / (cfg.prefix + "_noise_path_" + std::to_string(k) +
                            ".csv");
        io::write_noise_path_csv(f, path, meta);
        out.files.push_back(f.string());
      }
    }
  } else if (cfg.mode == "analytic") {
    const auto* sg = std::get_if<StaticGaussian>(&cfg.spec.noise);
    if (sg == nullptr)
      throw ConfigError("noise.type", "analytic mode needs static_gaussian");
    auto pc = pair_coefficients(cfg.spec.schedule,
                                cfg.spec.model.dephase_weights);
    fs::path ft = dir / (cfg.prefix + "_analytic_t2.csv");
    io::CsvWriter wt(ft);
    wt.meta(meta);
    wt.header({"pair_i", "pair_j", "coefficient", "t2_us"});
    for (int i = 0; i < pc.dim; ++i)
      for (int j = i + 1; j < pc.dim; ++j)
        wt.row({static_cast<double>(i + 1), static_cast<double>(j + 1),
                pc.at(i, j), analytic_t2(pc.at(i, j), sg->sigma_b)});
    out.files.push_back(ft.string());

    fs::path fc = dir / (cfg.prefix + "_analytic_coherence.csv");
    io::CsvWriter wc(fc);
    wc.meta(meta);
    std::vector<std::string> cols{"time_us"};
    for (int i = 0; i < pc.dim; ++i)
      for (int j = i + 1; j < pc.dim; ++j)
        cols.push_back("abs_rho_" + io::pair_label(i, j));
    wc.header(cols);
    for (long k = 0; k <= cfg.spec.schedule.repeats;
         k += cfg.spec.sample_stride) {
      double t = k * cfg.spec.schedule.dt;
      std::vector<double> row{t};
      for (int i = 0; i < pc.dim; ++i)
        for (int j = i + 1; j < pc.dim; ++j)
          row.push_back(analytic_coherence(pc.at(i, j), sg->sigma_b, t));
      wc.row(row);
    }
    out.files.push_back(fc.string());
  } else if (cfg.mode == "sweep") {
    auto sw = sweep(cfg.spec, cfg.sweep_param, cfg.sweep_values,
                    SweepOptions{.workers = cfg.workers});
    fs::path f = dir / (cfg.prefix + "_sweep.csv");
    io::write_sweep_csv(f, sw, meta);
    out.files.push_back(f.string());
  } else if (cfg.mode == "filter") {
    const auto& f = cfg.filter;
    const auto& noise = std::get<OrnsteinUhlenbeck>(cfg.spec.noise);
    fs::path fw = dir / (cfg.prefix + "_filter.csv");
    fs::path fe = dir / (cfg.prefix + "_envelope.csv");
    io::CsvWriter ww(fw);
    ww.meta(meta);
    ww.header({"omega_rad_per_us", "ft_sq_us2", "spectral_density"});
    io::CsvWriter we(fe);
    we.meta(meta);
    we.header({"time_us", "chi", "envelope"});
    if (f.pattern == "periodic") {
      const double mu = mu_from_tau(f.tau, f.lambda);
      auto make = [&](long m) {
        return f.window == "full_cycle"
                   ? periodic_window_full_cycle(f.lambda, mu, f.dt_us, m)
                   : periodic_window_decoupling_only(f.lambda, mu, f.dt_us, m);
      };
      auto w0 = make(f.periods);
      const double omega_max = f.omega_max > 0.0
                                   ? f.omega_max
                                   : default_omega_max(noise, w0.delta);
      for (int k = 1; k <= f.omega_points; ++k) {
        double omega = 3.0 * two_pi / w0.delta * k / f.omega_points;
        ww.row({omega, filter_ft_sq_closed(w0, omega),
                noise.spectral_density(omega)});
      }
      long step = f.t_points > 0
                      ? std::max<long>(1, f.periods / f.t_points)
                      : 1;
      for (long m = step; m <= f.periods; m += step) {
        auto w = make(m);
        auto r = chi(w, noise, omega_max, 1e-6);
        we.row({w.total_time(), r.value, std::exp(-r.value)});
      }
    } else {
      FilterSpec fsx{f.pulse_times_us, f.total_time_us};
      const double omega_max =
          f.omega_max > 0.0 ? f.omega_max
                            : default_omega_max(noise, f.total_time_us);
      for (int k = 1; k <= f.omega_points; ++k) {
        double omega = 50.0 * two_pi / f.total_time_us * k / f.omega_points;
        ww.row({omega, filter_ft_sq_numeric(fsx, omega),
                noise.spectral_density(omega)});
      }
      const int tp = f.t_points > 0 ? f.t_points : 40;
      for (int k = 1; k <= tp; ++k) {
        double t = f.total_time_us * k / tp;
        FilterSpec trunc;
        trunc.total_time = t;
        for (double pt : f.pulse_times_us)
          if (pt < t) trunc.pulse_times.push_back(pt);
        auto r = chi(trunc, noise, omega_max, 1e-6);
        we.row({t, r.value, std::exp(-r.value)});
      }
    }
    out.files.push_back(fw.string());
    out.files.push_back(fe.string());
  }

  double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  json manifest;
  manifest["version"] = QDECO_VERSION;
  manifest["config"] = cfg.echo;
  manifest["workers"] = cfg.workers;
  manifest["runtime_seconds"] = runtime;
  manifest["outputs"] = out.files;
  fs::path mf = dir / (cfg.prefix + "_manifest.json");
  io::write_json_file(mf, manifest);
  out.files.push_back(mf.string());
  return out;
}

}
