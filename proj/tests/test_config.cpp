#include <catch2/catch_amalgamated.hpp>

#include <qdeco/presets.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qdeco;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("qdeco_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

io::json minimal_simulate_config() {
  return io::json{
      {"mode", "simulate"},
      {"master_seed", 77},
      {"trajectories", 500},
      {"model", {{"type", "two_level"}, {"encoding", "pm1"}}},
      {"schedule",
       {{"type", "amplify"}, {"lambda", 1.0}, {"dt_us", 0.004}, {"cycles", 60}}},
      {"noise", {{"type", "static_gaussian"}, {"sigma_b_gauss", 0.2}}},
      {"initial_state", "pair:1,2"}};
}

} // namespace

TEST_CASE("minimal two-level config produces one series file") {
  auto dir = temp_dir("minimal");
  ExperimentConfig cfg = parse_config(minimal_simulate_config());
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  REQUIRE(out.files.size() == 2); // series + manifest
  CHECK(fs::exists(out.files[0]));
  std::string body = slurp(out.files[0]);
  CHECK(body.rfind("#eta ", 0) == 0);
  CHECK(body.find("re_rho_12") != std::string::npos);
}

TEST_CASE("config errors name the offending field") {
  auto j = minimal_simulate_config();
  j["trajectories"] = 0;
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("trajectories") != std::string::npos);
  }

  j = minimal_simulate_config();
  j["noise"] = {{"type", "bogus"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = minimal_simulate_config();
  j.erase("schedule");
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("schedule") != std::string::npos);
  }

  j = minimal_simulate_config();
  j["mode"] = "meditate";
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = minimal_simulate_config();
  j["initial_state"] = "pair:7,9";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("unit suffixes convert exactly once") {
  auto j = minimal_simulate_config();
  j["noise"] = {{"type", "static_gaussian"}, {"sigma_b_gauss", 0.2}};
  auto cfg = parse_config(j);
  const auto& sg = std::get<StaticGaussian>(cfg.spec.noise);
  CHECK(sg.sigma_b == Catch::Approx(0.2 * gamma_e));

  j["noise"] = {{"type", "static_gaussian"}, {"sigma_b_rad_per_us", 3.5216}};
  cfg = parse_config(j);
  CHECK(std::get<StaticGaussian>(cfg.spec.noise).sigma_b ==
        Catch::Approx(3.5216));

  j["noise"] = {{"type", "ou"}, {"l_gauss", 0.5}, {"tau_c_us", 2.0}};
  cfg = parse_config(j);
  const auto& ou = std::get<OrnsteinUhlenbeck>(cfg.spec.noise);
  CHECK(ou.l == Catch::Approx(0.5 * gamma_e));
  CHECK(ou.R == Catch::Approx(0.5));
}

TEST_CASE("nv model detuning rule and lab frame flag") {
  io::json j = minimal_simulate_config();
  j["model"] = {{"type", "nv_rwa"},   {"D_ghz", 2.87},
                {"Bz_gauss", 100.0},  {"B1_gauss", 1.717},
                {"detuning1_mhz", 1.9}};
  j["schedule"] = {{"type", "amplify"}, {"lambda", 0.0}, {"dt_us", 0.001},
                   {"cycles", 10}};
  j["initial_state"] = "basis:2";
  auto cfg = parse_config(j);
  CHECK_FALSE(cfg.spec.lab_frame);
  CHECK(cfg.spec.model.dim == 3);
  CHECK(cfg.spec.model.eps[0] == Catch::Approx(two_pi * 1.9));

  j["model"]["type"] = "nv_lab";
  cfg = parse_config(j);
  CHECK(cfg.spec.lab_frame);
  REQUIRE(cfg.spec.nv.has_value());
  CHECK(cfg.spec.nv->omega1 ==
        Catch::Approx(cfg.spec.nv->D + cfg.spec.nv->gamma * 100.0 -
                      two_pi * 1.9));
}

TEST_CASE("dsl schedule from a file path") {
  auto dir = temp_dir("dslpath");
  fs::path seq = dir / "ramp.seq";
  std::ofstream(seq) << "dim 2\ndt 0.004\nparam lambda 1\n"
                        "repeat 60 { sys on dt; sys off lambda*dt }";
  auto j = minimal_simulate_config();
  j["schedule"] = {{"type", "dsl"}, {"path", seq.string()}};
  auto cfg = parse_config(j);
  CHECK(cfg.spec.schedule.repeats == 60);

  j["schedule"]["path"] = (dir / "missing.seq").string();
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("schedule.path") != std::string::npos);
  }
}

TEST_CASE("fig2a at tau = 0 reproduces the fig1a curve at lambda = 1") {
  auto dir = temp_dir("fig2a0");
  presets::PresetOptions opt;
  opt.out_dir = dir.string();
  opt.trajectories = 300;
  opt.grid_points = 3;
  opt.workers = 2;
  presets::run_preset("fig1a", opt);
  presets::run_preset("fig2ab", opt);

  // collect rows, dropping the leading grid-value column
  auto rows_after_first = [&](const fs::path& f, const std::string& key) {
    std::ifstream in(f);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto sp = line.find(' ');
      if (line.substr(0, sp) == key)
        rows.push_back(line.substr(sp + 1));
    }
    return rows;
  };
  auto a = rows_after_first(dir / "fig1a_coherence.csv", "1");
  auto b = rows_after_first(dir / "fig2a_coherence.csv", "0");
  REQUIRE_FALSE(a.empty());
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("dsl schedule in a config") {
  auto j = minimal_simulate_config();
  j["schedule"] = {
      {"type", "dsl"},
      {"text", "dim 2\ndt 0.004\nparam lambda 1\n"
               "repeat 60 { sys on dt; sys off lambda*dt }"}};
  auto cfg = parse_config(j);
  CHECK(cfg.spec.schedule.repeats == 60);
  CHECK(cfg.spec.schedule.dt == Catch::Approx(0.004));
}

TEST_CASE("same config and seed give byte-identical outputs") {
  auto dir1 = temp_dir("repro1");
  auto dir2 = temp_dir("repro2");
  ExperimentConfig a = parse_config(minimal_simulate_config());
  a.out_dir = dir1.string();
  a.workers = 1;
  ExperimentConfig b = parse_config(minimal_simulate_config());
  b.out_dir = dir2.string();
  b.workers = 4;
  auto oa = presets::run_config(a);
  auto ob = presets::run_config(b);
  CHECK(slurp(oa.files[0]) == slurp(ob.files[0]));
}

TEST_CASE("json output format mirrors the csv content") {
  auto dir = temp_dir("jsonout");
  ExperimentConfig cfg = parse_config(minimal_simulate_config());
  cfg.out_dir = dir.string();
  cfg.format = "json";
  auto out = presets::run_config(cfg);
  io::json j = io::json::parse(slurp(out.files[0]));
  REQUIRE(j.contains("times_us"));
  REQUIRE(j.contains("coherences"));
  CHECK(j["coherences"][0]["pair"] == "12");
  CHECK(j["coherences"][0]["abs"].size() == j["times_us"].size());
  CHECK(j["populations"].size() == 2);
}

TEST_CASE("sweep mode emits the table") {
  auto dir = temp_dir("sweep");
  auto j = minimal_simulate_config();
  j["mode"] = "sweep";
  j["trajectories"] = 400;
  j["sweep"] = {{"param", "lambda"},
                {"values", io::json::array({0.0, 1.0})}};
  auto cfg = parse_config(j);
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  std::string body = slurp(out.files[0]);
  CHECK(body.find("t2_fit_12_us") != std::string::npos);
  CHECK(body.find("t2_analytic_12_us") != std::string::npos);
}

TEST_CASE("analytic mode emits coefficient table") {
  auto dir = temp_dir("analytic");
  auto j = minimal_simulate_config();
  j["mode"] = "analytic";
  auto cfg = parse_config(j);
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  std::string body = slurp(out.files[0]);
  CHECK(body.find("coefficient") != std::string::npos);
}

TEST_CASE("filter mode emits spectral weight and envelope tables") {
  auto dir = temp_dir("filter");
  io::json j{{"mode", "filter"},
             {"noise", {{"type", "ou"}, {"l_rad_per_us", 2.0}, {"R_per_us", 1.0}}},
             {"filter",
              {{"pattern", "periodic"}, {"lambda", 1.0}, {"tau", 1.0},
               {"dt_us", 0.01}, {"periods", 8}, {"omega_points", 16}}}};
  auto cfg = parse_config(j);
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  REQUIRE(out.files.size() == 3);
  CHECK(slurp(out.files[0]).find("ft_sq_us2") != std::string::npos);
  CHECK(slurp(out.files[1]).find("envelope") != std::string::npos);
}

TEST_CASE("ou noise path dump writes the documented columns") {
  auto dir = temp_dir("noisedump");
  auto j = minimal_simulate_config();
  j["noise"] = {{"type", "ou"}, {"l_rad_per_us", 1.0}, {"R_per_us", 1.0}};
  j["dump_noise_paths"] = 2;
  j["trajectories"] = 50;
  auto cfg = parse_config(j);
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  bool found = false;
  for (const auto& f : out.files)
    if (f.find("noise_path_0") != std::string::npos) {
      found = true;
      CHECK(slurp(f).find("# time_us b_rad_per_us") != std::string::npos);
    }
  CHECK(found);
}

TEST_CASE("preset golden headers") {
  auto dir = temp_dir("golden");
  presets::PresetOptions opt;
  opt.out_dir = dir.string();
  opt.trajectories = 64;
  opt.grid_points = 3;
  opt.workers = 2;

  SECTION("fig1b") {
    auto files = presets::run_preset("fig1b", opt);
    std::string body = slurp(files[0]);
    CHECK(body.find("# lambda t2_fit_us t2_err_us t2_analytic_us "
                    "ratio_t2_0_over_t2 ratio_expected") != std::string::npos);
  }
  SECTION("fig2cd") {
    auto files = presets::run_preset("fig2cd", opt);
    CHECK(slurp(files[0]).find("# tau omega_rad_per_us ft_sq_us2 "
                               "spectral_density") != std::string::npos);
    CHECK(slurp(files[1]).find("# tau time_us chi envelope") !=
          std::string::npos);
  }
  SECTION("fig3bcd") {
    auto files = presets::run_preset("fig3bcd", opt);
    REQUIRE(files.size() == 4); // three maps + manifest
    for (int k = 0; k < 3; ++k)
      CHECK(slurp(files[k]).find("# tau1 tau2 t2_fit_us t2_err_us "
                                 "t2_analytic_us feasible") !=
            std::string::npos);
  }
  SECTION("unknown preset") {
    CHECK_THROWS_AS(presets::run_preset("fig9z", opt), UnknownPreset);
  }
}

TEST_CASE("manifest re-run information") {
  auto dir = temp_dir("manifest");
  ExperimentConfig cfg = parse_config(minimal_simulate_config());
  cfg.out_dir = dir.string();
  auto out = presets::run_config(cfg);
  io::json manifest = io::json::parse(slurp(out.files.back()));
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("config"));
  CHECK(manifest["config"]["master_seed"] == 77);
  CHECK(manifest.contains("runtime_seconds"));
  CHECK(manifest.contains("outputs"));
}

#ifdef QDECO_CLI_PATH
TEST_CASE("cli exit codes") {
  auto dir = temp_dir("cli");
  auto run_cli = [&](const std::string& args) {
    std::string cmd = std::string(QDECO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  SECTION("success on a valid config") {
    fs::path cfg_path = dir / "ok.json";
    std::ofstream(cfg_path) << minimal_simulate_config().dump();
    CHECK(run_cli("--config " + cfg_path.string() + " --out " + dir.string()) ==
          0);
  }
  SECTION("validation failure exits 2") {
    auto j = minimal_simulate_config();
    j["trajectories"] = 0;
    fs::path cfg_path = dir / "bad.json";
    std::ofstream(cfg_path) << j.dump();
    CHECK(run_cli("--config " + cfg_path.string() + " --out " + dir.string()) ==
          2);
  }
  SECTION("unknown preset exits 2") {
    CHECK(run_cli("--preset fig9z --out " + dir.string()) == 2);
  }
  SECTION("missing arguments exit 2") {
    CHECK(run_cli("--out " + dir.string()) == 2);
  }
}
#endif
