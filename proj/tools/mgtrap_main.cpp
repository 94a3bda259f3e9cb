// mgtrap: scenario-driven front end for the trap simulation and analysis library.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mgtrap/errors.hpp"
#include "mgtrap/scenario/commands.hpp"
#include "mgtrap/scenario/config.hpp"

namespace fs = std::filesystem;
using namespace mgtrap::scenario;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw mgtrap::ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magneto-gravitational trap simulation, spectral analysis and tracking", "mgtrap"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool svg = false;
  app.add_option("--config", config_path, "scenario file (YAML)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  app.add_flag("--svg", svg, "also write SVG plots of spectra");

  auto* fit_trap = app.add_subcommand("fit-trap", "fit multipole coefficients to measured frequencies");
  auto* simulate = app.add_subcommand("simulate", "simulate trajectories for every configured pressure");
  auto* analyze = app.add_subcommand("analyze", "fit spectra of trajectory files or simulate output");
  std::vector<std::string> analyze_inputs;
  analyze->add_option("inputs", analyze_inputs, "trajectory CSV files or directories")->required();
  auto* track = app.add_subcommand("track", "locate the particle in camera frames");
  std::string track_source;
  track->add_option("source", track_source, "directory of PGM frames or a raw-stream JSON sidecar")->required();
  auto* reproduce = app.add_subcommand("reproduce-paper", "run the built-in reproduction and print a report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  RunOptions opts;
  opts.out = out_dir;
  opts.seed = seed;
  opts.threads = threads;
  opts.svg = svg;
  opts.log = &std::cout;

  return guarded(std::cerr, [&]() -> int {
    if (reproduce->parsed()) {
      return cmd_reproduce_paper(config_path.empty() ? "" : read_text(config_path), opts);
    }
    const ScenarioConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (fit_trap->parsed()) return cmd_fit_trap(cfg, opts);
    if (simulate->parsed()) return cmd_simulate(cfg, opts);
    if (analyze->parsed()) return cmd_analyze(cfg, {analyze_inputs.begin(), analyze_inputs.end()}, opts);
    if (track->parsed()) return cmd_track(cfg, track_source, opts);
    return kExitInput;
  });
}
