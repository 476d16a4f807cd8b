#include <CLI11.hpp>

#include <qdeco/presets.hpp>
#include <qdeco/version.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>

namespace {

int run(const std::string& config_path, const std::string& preset,
        const std::string& out_dir, std::uint64_t seed, long trajectories,
        int workers, const std::string& format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  if (!preset.empty()) {
    qdeco::presets::PresetOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.trajectories = trajectories;
    opt.workers = workers;
    if (!format.empty()) opt.format = format;
    auto files = qdeco::presets::run_preset(preset, opt);
    for (const auto& f : files) std::cout << f << "\n";
    return 0;
  }

  qdeco::ExperimentConfig cfg = qdeco::load_config(config_path);
  cfg.out_dir = out_dir;
  if (workers > 0) cfg.workers = workers;
  if (!format.empty()) {
    if (format != "csv" && format != "json")
      throw qdeco::ConfigError("format", "expected csv or json");
    cfg.format = format;
  }
  if (seed != 0) {
    cfg.spec.master_seed = seed;
    cfg.echo["master_seed"] = seed;
  }
  if (trajectories > 0) {
    cfg.spec.trajectories = trajectories;
    cfg.echo["trajectories"] = trajectories;
  }
  auto out = qdeco::presets::run_config(cfg);
  for (const auto& f : out.files) std::cout << f << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"engineered-decoherence simulator for driven spin qudits"};
  app.set_version_flag("--version", QDECO_VERSION);

  std::string config_path, preset, format;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  long trajectories = 0;
  int workers = 0;

  auto* oc = app.add_option("--config", config_path,
                            "experiment configuration file (JSON)");
  auto* op = app.add_option(
      "--preset", preset,
      "preset: fig1a fig1b fig1cd fig2ab fig2cd fig3a fig3bcd");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--trajectories", trajectories, "trajectory count override");
  app.add_option("--workers", workers,
                 "worker thread count (affects speed only, never results)");
  app.add_option("--format", format, "output format: csv or json");
  oc->excludes(op);

  CLI11_PARSE(app, argc, argv);

  if (config_path.empty() && preset.empty()) {
    std::cerr << "error: provide --config or --preset\n";
    return 2;
  }

  try {
    return run(config_path, preset, out_dir, seed, trajectories, workers,
               format);
  } catch (const qdeco::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qdeco::SyntaxError& e) {
    std::cerr << "sequence error: " << e.what() << "\n";
    return 2;
  } catch (const qdeco::UnknownPreset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qdeco::InvalidParam& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const qdeco::Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
