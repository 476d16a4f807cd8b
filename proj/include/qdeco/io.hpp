#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "qdeco/engine.hpp"
#include "qdeco/errors.hpp"
#include "qdeco/fitting.hpp"
#include "qdeco/noise.hpp"

// CSV / JSON emission. All numbers are written with shortest-round-trip
// formatting, so equal results produce byte-identical files.
namespace qdeco::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string pair_label(int i, int j) {
  return std::to_string(i + 1) + std::to_string(j + 1);
}

class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("cannot open output file " + path.string());
  }

  // metadata line carrying the physics spec; never includes worker counts or
  // timings, which do not affect results
  void meta(const json& j) { out_ << "#eta " << j.dump() << "\n"; }

  void header(const std::vector<std::string>& cols) {
    out_ << "#";
    for (const auto& c : cols) out_ << " " << c;
    out_ << "\n";
  }

  void row(const std::vector<double>& vals) {
    for (size_t k = 0; k < vals.size(); ++k) {
      if (k) out_ << " ";
      out_ << format_double(vals[k]);
    }
    out_ << "\n";
  }

private:
  std::ofstream out_;
};

inline std::vector<std::string> series_columns(int dim) {
  std::vector<std::string> cols{"time_us", "wall_time_us"};
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      std::string p = pair_label(i, j);
      cols.push_back("re_rho_" + p);
      cols.push_back("im_rho_" + p);
      cols.push_back("abs_rho_" + p);
      cols.push_back("stderr_" + p);
    }
  for (int m = 0; m < dim; ++m)
    cols.push_back("pop_" + std::to_string(m + 1));
  return cols;
}

inline void write_series_csv(const std::filesystem::path& path,
                             const EnsembleResult& res, int dim,
                             const json& meta) {
  CsvWriter w(path);
  w.meta(meta);
  w.header(series_columns(dim));
  for (size_t k = 0; k < res.times.size(); ++k) {
    std::vector<double> vals{res.times[k], res.wall_times[k]};
    for (const auto& c : res.coherences) {
      vals.push_back(c.values[k].real());
      vals.push_back(c.values[k].imag());
      vals.push_back(std::abs(c.values[k]));
      vals.push_back(c.stderrs[k]);
    }
    for (const auto& p : res.populations) vals.push_back(p.values[k]);
    w.row(vals);
  }
}

inline json series_json(const EnsembleResult& res, const json& meta) {
  json j;
  j["spec"] = meta;
  j["times_us"] = res.times;
  j["wall_times_us"] = res.wall_times;
  j["coherences"] = json::array();
  for (const auto& c : res.coherences) {
    json e;
    e["pair"] = pair_label(c.i, c.j);
    json re = json::array(), im = json::array(), ab = json::array();
    for (const auto& v : c.values) {
      re.push_back(v.real());
      im.push_back(v.imag());
      ab.push_back(std::abs(v));
    }
    e["re"] = re;
    e["im"] = im;
    e["abs"] = ab;
    e["stderr"] = c.stderrs;
    j["coherences"].push_back(e);
  }
  j["populations"] = json::array();
  for (const auto& p : res.populations) {
    json e;
    e["level"] = p.level + 1;
    e["values"] = p.values;
    j["populations"].push_back(e);
  }
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file " + path.string());
  out << j.dump(2) << "\n";
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            const SweepResult& sweep, const json& meta) {
  CsvWriter w(path);
  w.meta(meta);
  std::vector<std::string> cols{sweep.param};
  for (auto [i, j] : sweep.pairs) {
    std::string p = pair_label(i, j);
    cols.push_back("t2_fit_" + p + "_us");
    cols.push_back("t2_err_" + p + "_us");
    cols.push_back("t2_analytic_" + p + "_us");
  }
  cols.push_back("feasible");
  w.header(cols);
  for (const auto& row : sweep.rows) {
    std::vector<double> vals{row.value};
    for (size_t c = 0; c < sweep.pairs.size(); ++c) {
      if (c < row.cells.size()) {
        vals.push_back(row.cells[c].fit.t2);
        vals.push_back(row.cells[c].fit.t2_stderr);
        vals.push_back(row.cells[c].analytic);
      } else {
        vals.insert(vals.end(), 3,
                    std::numeric_limits<double>::quiet_NaN());
      }
    }
    vals.push_back(row.feasible ? 1.0 : 0.0);
    w.row(vals);
  }
}

inline void write_noise_path_csv(const std::filesystem::path& path,
                                 const NoisePath& p, const json& meta) {
  CsvWriter w(path);
  w.meta(meta);
  w.header({"time_us", "b_rad_per_us"});
  for (size_t k = 0; k < p.times.size(); ++k)
    w.row({p.times[k], p.values[k]});
}

}
