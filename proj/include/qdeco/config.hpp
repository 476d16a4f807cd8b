#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdeco/engine.hpp"
#include "qdeco/filterfn.hpp"
#include "qdeco/fitting.hpp"
#include "qdeco/io.hpp"
#include "qdeco/sequence_dsl.hpp"
#include "qdeco/version.hpp"

// Experiment configuration: JSON in laboratory units (GHz, MHz, Gauss, us)
// with explicit unit suffixes in the field names. Conversion to internal
// units (rad/us) happens exactly once, here.
namespace qdeco {

namespace cfg_detail {

using io::json;

inline const json& require(const json& j, const std::string& field) {
  if (!j.contains(field))
    throw ConfigError(field, "missing required field");
  return j.at(field);
}

inline double require_num(const json& j, const std::string& field) {
  const json& v = require(j, field);
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& field, double dflt) {
  if (!j.contains(field)) return dflt;
  if (!j.at(field).is_number()) throw ConfigError(field, "expected a number");
  return j.at(field).get<double>();
}

inline std::string str_or(const json& j, const std::string& field,
                          const std::string& dflt) {
  if (!j.contains(field)) return dflt;
  if (!j.at(field).is_string()) throw ConfigError(field, "expected a string");
  return j.at(field).get<std::string>();
}

} // namespace cfg_detail

struct ExperimentConfig {
  std::string mode;
  SimulationSpec spec;
  bool has_spec = false;
  double gamma = gamma_e; // rad/(us Gauss), used for Gauss-valued noise

  std::string sweep_param;
  std::vector<double> sweep_values;

  struct FilterConfig {
    std::string pattern = "periodic"; // periodic | explicit
    std::string window = "decoupling_only"; // | full_cycle
    double lambda = 1.0;
    double tau = 0.0;
    double dt_us = 0.01;
    long periods = 8;
    std::vector<double> pulse_times_us;
    double total_time_us = 0.0;
    double omega_max = 0.0; // 0 selects the default cutoff rule
    int omega_points = 400;
    int t_points = 0; // periodic: 0 means one point per period
  } filter;

  std::string preset;
  std::string out_dir = ".";
  std::string prefix = "run";
  std::string format = "csv";
  int workers = 0;
  long dump_noise_paths = 0;
  io::json echo;
};

namespace cfg_detail {

inline NoiseModel parse_noise(const json& j, double gamma) {
  std::string type = str_or(j, "type", "none");
  if (type == "none") return NoNoise{};
  if (type == "static_gaussian") {
    double sigma;
    if (j.contains("sigma_b_gauss"))
      sigma = require_num(j, "sigma_b_gauss") * gamma;
    else
      sigma = require_num(j, "sigma_b_rad_per_us");
    if (!(sigma > 0.0))
      throw ConfigError("noise.sigma_b", "must be positive");
    return StaticGaussian{sigma};
  }
  if (type == "ou") {
    double l;
    if (j.contains("l_gauss"))
      l = require_num(j, "l_gauss") * gamma;
    else
      l = require_num(j, "l_rad_per_us");
    double R;
    if (j.contains("tau_c_us"))
      R = 1.0 / require_num(j, "tau_c_us");
    else
      R = require_num(j, "R_per_us");
    if (!(l > 0.0) || !(R > 0.0))
      throw ConfigError("noise", "l and R must be positive");
    return OrnsteinUhlenbeck{l, R};
  }
  throw ConfigError("noise.type", "unknown noise type '" + type + "'");
}

inline NVParams parse_nv(const json& j) {
  NVParams p;
  p.D = ghz_to_rad_per_us(num_or(j, "D_ghz", 2.87));
  p.Bz = num_or(j, "Bz_gauss", 0.0);
  p.gamma = two_pi * num_or(j, "gamma_mhz_per_gauss", 2.8025);
  p.B1 = num_or(j, "B1_gauss", 0.0);
  p.B2 = num_or(j, "B2_gauss", 0.0);
  const double res1 = p.D + p.gamma * p.Bz;
  const double res2 = p.D - p.gamma * p.Bz;
  if (j.contains("omega1_ghz"))
    p.omega1 = ghz_to_rad_per_us(require_num(j, "omega1_ghz"));
  else
    p.omega1 = res1 - mhz_to_rad_per_us(num_or(j, "detuning1_mhz", 0.0));
  if (j.contains("omega2_ghz"))
    p.omega2 = ghz_to_rad_per_us(require_num(j, "omega2_ghz"));
  else
    p.omega2 = res2 - mhz_to_rad_per_us(num_or(j, "detuning2_mhz", 0.0));
  p.validate();
  return p;
}

inline void parse_model(const json& j, ExperimentConfig& cfg) {
  std::string type = str_or(j, "type", "two_level");
  if (type == "two_level") {
    std::string enc = str_or(j, "encoding", "pm1");
    double eps0 = mhz_to_rad_per_us(num_or(j, "eps1_mhz", 0.0));
    double eps1 = mhz_to_rad_per_us(num_or(j, "eps2_mhz", 0.0));
    double jx = mhz_to_rad_per_us(num_or(j, "J_mhz", 0.0));
    cfg.spec.model = two_level_model(enc, eps0, eps1, jx);
    return;
  }
  if (type == "qudit") {
    QuditModel m;
    m.dim = static_cast<int>(num_or(j, "dim", 3));
    if (m.dim < 2 || m.dim > 8) throw ConfigError("model.dim", "must be 2..8");
    m.eps.assign(m.dim, 0.0);
    if (j.contains("eps_mhz")) {
      const json& e = j.at("eps_mhz");
      if (!e.is_array() || static_cast<int>(e.size()) != m.dim)
        throw ConfigError("model.eps_mhz", "expected an array of length dim");
      for (int k = 0; k < m.dim; ++k)
        m.eps[k] = mhz_to_rad_per_us(e.at(k).get<double>());
    }
    m.J = Eigen::MatrixXd::Zero(m.dim, m.dim);
    if (j.contains("J_mhz")) {
      const json& jm = j.at("J_mhz");
      if (!jm.is_array() || static_cast<int>(jm.size()) != m.dim)
        throw ConfigError("model.J_mhz", "expected a dim x dim array");
      for (int r = 0; r < m.dim; ++r)
        for (int c = 0; c < m.dim; ++c)
          m.J(r, c) = mhz_to_rad_per_us(jm.at(r).at(c).get<double>());
    }
    if (j.contains("dephase_weights")) {
      const json& w = j.at("dephase_weights");
      if (!w.is_array() || static_cast<int>(w.size()) != m.dim)
        throw ConfigError("model.dephase_weights",
                          "expected an array of length dim");
      m.dephase_weights = w.get<std::vector<double>>();
    } else {
      m.dephase_weights = default_dephase_weights(m.dim);
    }
    m.validate();
    cfg.spec.model = m;
    return;
  }
  if (type == "nv_rwa" || type == "nv_lab") {
    NVParams p = parse_nv(j);
    cfg.gamma = p.gamma;
    if (type == "nv_lab") {
      cfg.spec.lab_frame = true;
      cfg.spec.nv = p;
      cfg.spec.model = QuditModel{}; // unused in lab mode
    } else {
      cfg.spec.model = effective_qudit_model(p);
    }
    return;
  }
  throw ConfigError("model.type", "unknown model type '" + type + "'");
}

inline void parse_schedule(const json& j, ExperimentConfig& cfg, int dim) {
  std::string type = str_or(j, "type", "amplify");
  if (type == "dsl") {
    std::string text;
    if (j.contains("text")) {
      text = j.at("text").get<std::string>();
    } else if (j.contains("path")) {
      std::string path = j.at("path").get<std::string>();
      std::ifstream in(path);
      if (!in)
        throw ConfigError("schedule.path", "cannot open '" + path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    } else {
      throw ConfigError("schedule.text",
                        "dsl schedule needs program text or a path");
    }
    cfg.spec.schedule = dsl::parse_sequence(text);
    return;
  }
  double dt = require_num(j, "dt_us");
  long cycles = static_cast<long>(num_or(j, "cycles", 100));
  double lambda = num_or(j, "lambda", 0.0);
  auto mu_of = [&](const std::string& mu_key, const std::string& tau_key) {
    if (j.contains(tau_key))
      return mu_from_tau(require_num(j, tau_key), lambda);
    return num_or(j, mu_key, 0.0);
  };
  if (type == "amplify") {
    cfg.spec.schedule = build_amplify_schedule(lambda, dt, cycles, dim);
  } else if (type == "one_channel") {
    cfg.spec.schedule =
        build_one_channel_schedule(lambda, mu_of("mu", "tau"), dt, cycles, dim);
  } else if (type == "two_channel") {
    cfg.spec.schedule = build_two_channel_schedule(
        lambda, mu_of("mu1", "tau1"), mu_of("mu2", "tau2"), dt, cycles);
  } else {
    throw ConfigError("schedule.type", "unknown schedule type '" + type + "'");
  }
}

inline ComplexVector parse_initial_state(const json& j, int dim) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    ComplexVector v = ComplexVector::Zero(dim);
    if (s == "equal") {
      v.setConstant(1.0 / std::sqrt(static_cast<double>(dim)));
      return v;
    }
    if (s.rfind("basis:", 0) == 0) {
      int k = std::stoi(s.substr(6));
      if (k < 1 || k > dim)
        throw ConfigError("initial_state", "basis level out of range");
      v[k - 1] = 1.0;
      return v;
    }
    if (s.rfind("pair:", 0) == 0) {
      auto comma = s.find(',', 5);
      if (comma == std::string::npos)
        throw ConfigError("initial_state", "pair form is pair:i,j");
      int i = std::stoi(s.substr(5, comma - 5));
      int k = std::stoi(s.substr(comma + 1));
      if (i < 1 || k < 1 || i >= k || k > dim)
        throw ConfigError("initial_state", "pair levels out of range");
      v[i - 1] = v[k - 1] = 1.0 / std::sqrt(2.0);
      return v;
    }
    throw ConfigError("initial_state", "unknown named state '" + s + "'");
  }
  if (j.is_object()) {
    const json& re = require(j, "re");
    if (!re.is_array() || static_cast<int>(re.size()) != dim)
      throw ConfigError("initial_state.re", "expected an array of length dim");
    ComplexVector v(dim);
    for (int k = 0; k < dim; ++k) v[k] = re.at(k).get<double>();
    if (j.contains("im")) {
      const json& im = j.at("im");
      if (!im.is_array() || static_cast<int>(im.size()) != dim)
        throw ConfigError("initial_state.im",
                          "expected an array of length dim");
      for (int k = 0; k < dim; ++k)
        v[k] += complexd(0.0, im.at(k).get<double>());
    }
    double n = v.norm();
    if (!(n > 0.0)) throw ConfigError("initial_state", "zero state");
    return v / n;
  }
  throw ConfigError("initial_state", "expected a string or an object");
}

inline void parse_prep(const json& j, ExperimentConfig& cfg) {
  if (!j.is_array()) throw ConfigError("prep", "expected an array of events");
  for (const auto& e : j) {
    if (e.contains("gate")) {
      const json& g = e.at("gate");
      if (!g.is_array() || g.size() != 2)
        throw ConfigError("prep.gate", "expected [i, j]");
      int gi = g.at(0).get<int>() - 1;
      int gj = g.at(1).get<int>() - 1;
      cfg.spec.prep.push_back(GateEvent{gi, gj});
    } else {
      Segment s;
      s.duration = require_num(e, "duration_us");
      s.system_on = e.contains("system_on") && e.at("system_on").get<bool>();
      cfg.spec.prep.push_back(s);
    }
  }
}

inline void parse_filter(const json& j, ExperimentConfig& cfg) {
  auto& f = cfg.filter;
  f.pattern = str_or(j, "pattern", "periodic");
  f.window = str_or(j, "window", "decoupling_only");
  f.lambda = num_or(j, "lambda", 1.0);
  f.tau = num_or(j, "tau", 0.0);
  f.dt_us = num_or(j, "dt_us", 0.01);
  f.periods = static_cast<long>(num_or(j, "periods", 8));
  f.total_time_us = num_or(j, "total_time_us", 0.0);
  if (j.contains("pulse_times_us"))
    f.pulse_times_us = j.at("pulse_times_us").get<std::vector<double>>();
  f.omega_max = num_or(j, "omega_max_rad_per_us", 0.0);
  f.omega_points = static_cast<int>(num_or(j, "omega_points", 400));
  f.t_points = static_cast<int>(num_or(j, "t_points", 0));
  if (f.pattern != "periodic" && f.pattern != "explicit")
    throw ConfigError("filter.pattern", "expected periodic or explicit");
  if (f.pattern == "explicit" && !(f.total_time_us > 0.0))
    throw ConfigError("filter.total_time_us",
                      "explicit pattern needs a total time");
}

} // namespace cfg_detail

inline ExperimentConfig parse_config(const io::json& j) {
  using namespace cfg_detail;
  ExperimentConfig cfg;
  cfg.echo = j;
  cfg.mode = str_or(j, "mode", "");
  static const std::vector<std::string> modes{"simulate", "analytic", "filter",
                                              "sweep", "preset"};
  if (std::find(modes.begin(), modes.end(), cfg.mode) == modes.end())
    throw ConfigError("mode",
                      "expected one of simulate|analytic|filter|sweep|preset");

  if (j.contains("output")) {
    const json& o = j.at("output");
    cfg.out_dir = str_or(o, "dir", ".");
    cfg.prefix = str_or(o, "prefix", "run");
    cfg.format = str_or(o, "format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
      throw ConfigError("output.format", "expected csv or json");
  }
  cfg.workers = static_cast<int>(num_or(j, "workers", 0));

  if (cfg.mode == "preset") {
    cfg.preset = str_or(j, "preset", "");
    if (cfg.preset.empty())
      throw ConfigError("preset", "preset mode needs a preset name");
    return cfg;
  }
  if (cfg.mode == "filter") {
    parse_filter(j.contains("filter") ? j.at("filter") : json::object(), cfg);
    if (j.contains("noise"))
      cfg.spec.noise = parse_noise(j.at("noise"), cfg.gamma);
    if (!std::holds_alternative<OrnsteinUhlenbeck>(cfg.spec.noise))
      throw ConfigError("noise.type", "filter mode needs ou noise");
    return cfg;
  }

  // simulate / analytic / sweep share the physics spec
  parse_model(j.contains("model") ? j.at("model") : json::object(), cfg);
  parse_schedule(require(j, "schedule"), cfg, cfg.spec.dim());
  if (j.contains("noise"))
    cfg.spec.noise = parse_noise(j.at("noise"), cfg.gamma);
  cfg.spec.initial_state = j.contains("initial_state")
                               ? parse_initial_state(j.at("initial_state"),
                                                     cfg.spec.dim())
                               : parse_initial_state(json("equal"),
                                                     cfg.spec.dim());
  if (j.contains("prep")) parse_prep(j.at("prep"), cfg);

  double traj = num_or(j, "trajectories", 10000);
  if (!(traj >= 1)) throw ConfigError("trajectories", "must be >= 1");
  cfg.spec.trajectories = static_cast<long>(traj);
  cfg.spec.sample_stride = static_cast<int>(num_or(j, "sample_stride", 1));
  if (cfg.spec.sample_stride < 1)
    throw ConfigError("sample_stride", "must be >= 1");
  cfg.spec.master_seed =
      static_cast<std::uint64_t>(num_or(j, "master_seed", 1));
  cfg.dump_noise_paths = static_cast<long>(num_or(j, "dump_noise_paths", 0));
  cfg.has_spec = true;

  if (cfg.mode == "sweep") {
    const json& s = require(j, "sweep");
    cfg.sweep_param = str_or(s, "param", "");
    if (cfg.sweep_param.empty())
      throw ConfigError("sweep.param", "missing sweep parameter name");
    cfg.sweep_values = require(s, "values").get<std::vector<double>>();
    if (cfg.sweep_values.empty())
      throw ConfigError("sweep.values", "must not be empty");
  }

  if (cfg.mode == "simulate" || cfg.mode == "sweep") {
    try {
      cfg.spec.validate();
    } catch (const Error& e) {
      throw ConfigError("spec", e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  io::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config", std::string("JSON parse failure: ") + e.what());
  }
  return parse_config(j);
}

// physics metadata for the '#eta' line; excludes anything that cannot change
// the results (worker counts, timings)
inline io::json spec_meta(const ExperimentConfig& cfg) {
  io::json meta;
  io::json e = cfg.echo;
  e.erase("workers");
  e.erase("output");
  meta["config"] = e;
  meta["version"] = QDECO_VERSION;
  return meta;
}

}
