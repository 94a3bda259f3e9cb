#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/frame_io.hpp"
#include "mgtrap/scenario/commands.hpp"
#include "mgtrap/scenario/config.hpp"
#include "mgtrap/trajectory_io.hpp"

using namespace mgtrap;
using namespace mgtrap::scenario;
namespace fs = std::filesystem;

namespace {

const std::string kSmall = R"(trap:
  y0_um: 75
  measured: {fx_hz: 104, fy_hz: 130, fz_hz: 9.6}
particle:
  mass_pg: 28
gas:
  pressures_mbar: [5.3e-2]
sim:
  duration_s: 30
  n_trials_count: 3
  seed_id: 77
analysis:
  axes: [y, z]
tracking:
  min_mass_counts: 400
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mgtrap_test_scenario_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

RunOptions options(const fs::path& out) {
  RunOptions o;
  o.out = out;
  o.threads = 2;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MGTRAP_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK(config_error("trap:\n  measured: {fx_hz: 104, fy_hz: 130}\n").find("trap.measured.fz_hz") !=
        std::string::npos);
  CHECK(config_error(kSmall + "bogus: 1\n").find("bogus") != std::string::npos);
  CHECK(config_error("gas:\n  pressure: [1]\n").find("gas.pressure") != std::string::npos);
  CHECK(config_error("gas:\n  pressures_mbar: fast\n").find("pressures_mbar") != std::string::npos);
  CHECK(config_error("sim:\n  duration_s: -1\n") != "");
  CHECK(config_error("trap: [1, 2\n") != "");
}

TEST_CASE("config merge and hash") {
  const ScenarioConfig a = parse_config(kSmall);
  const ScenarioConfig b = parse_config(kSmall);
  CHECK(a.hash == b.hash);
  CHECK(a.seed() == 77);
  REQUIRE(a.particle_mass);
  CHECK(*a.particle_mass == doctest::Approx(28e-15));
  CHECK(a.sim.sim.dt == doctest::Approx(1.0 / (496 * 20)));

  const ScenarioConfig c = parse_config("gas:\n  kappa_hz_per_mbar: 126\n", kSmall);
  CHECK(c.gas.kappa == 126);
  CHECK(c.gas.pressures == a.gas.pressures);
  CHECK(c.hash != a.hash);

  const ScenarioConfig d = parse_config("particle:\n  mass_pg: fit-from-psd\n", kSmall);
  CHECK_FALSE(d.particle_mass);
  CHECK_THROWS_AS(d.particle(), ConfigError);
  CHECK(config_error("particle:\n  mass_pg: fit-from-psd\nanalysis:\n  calibrate: temperature\n") != "");
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("fit-trap writes coefficients and round trips") {
  const fs::path out = scratch("fit");
  REQUIRE(cmd_fit_trap(parse_config(kSmall), options(out)) == kExitOk);
  const auto j = read_json(out / "coefficients.json");
  CHECK(j["a2_t"].get<double>() == doctest::Approx(-1.3).epsilon(0.15));
  CHECK(j["b_eq_tesla"].get<double>() == doctest::Approx(0.2).epsilon(0.1));
  CHECK(fs::exists(out / "manifest.json"));

  // Frequencies of known coefficients fed back through the command.
  const MultipoleCoefficients known{-1.25, 0.02, 0.7, 75e-6};
  const ModeFrequencies f = mode_frequencies({known, kDiamond});
  std::ostringstream y;
  y.precision(17);
  y << "trap:\n  measured: {fx_hz: " << f.fx << ", fy_hz: " << f.fy << ", fz_hz: " << f.fz << "}\n";
  const fs::path out2 = scratch("fit2");
  REQUIRE(cmd_fit_trap(parse_config(y.str(), kSmall), options(out2)) == kExitOk);
  const auto k = read_json(out2 / "coefficients.json");
  CHECK(k["a2_t"].get<double>() == doctest::Approx(known.a2).epsilon(1e-6));
  CHECK(k["a3_t"].get<double>() == doctest::Approx(known.a3).epsilon(1e-6));
  CHECK(k["a4_t"].get<double>() == doctest::Approx(known.a4).epsilon(1e-6));

  std::ostringstream err;
  CHECK(guarded(err, [&] {
          return cmd_fit_trap(parse_config("trap:\n  material: {chi_si: 0}\n", kSmall), options(scratch("fit3")));
        }) == kExitNumerical);
}

TEST_CASE("simulate is byte-identical on rerun and analyze fits the result") {
  const ScenarioConfig cfg = parse_config(kSmall);
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  REQUIRE(cmd_simulate(cfg, options(a)) == kExitOk);
  REQUIRE(cmd_simulate(cfg, options(b)) == kExitOk);
  for (const char* name : {"trial_000.csv", "trial_001.csv", "trial_002.csv", "run.json"}) {
    REQUIRE(fs::exists(a / "p0" / name));
    CHECK(slurp(a / "p0" / name) == slurp(b / "p0" / name));
  }
  CHECK_FALSE(fs::exists(a / "p0" / "trial_000_force.csv"));
  CHECK(fs::exists(a / "manifest.json"));

  const fs::path an = scratch("analyze");
  std::vector<SummaryRow> rows;
  REQUIRE(cmd_analyze(cfg, {a}, options(an), &rows) == kExitOk);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.fit);
    CHECK(r.fit->weighted);
    CHECK(r.fit->n_trials == 3);
    REQUIRE(r.mass);
    CHECK(r.mass->value == doctest::Approx(28e-15).epsilon(0.2));
  }
  CHECK(fs::exists(an / "summary.csv"));
  CHECK(slurp(an / "summary.csv").rfind("group,pressure_mbar,axis,f0_hz", 0) == 0);

  // A single trajectory file is fit without weights.
  rows.clear();
  REQUIRE(cmd_analyze(cfg, {a / "p0" / "trial_000.csv"}, options(scratch("analyze1")), &rows) == kExitOk);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].fit);
  CHECK_FALSE(rows[0].fit->weighted);
  CHECK(rows[0].fit->n_trials == 1);
}

TEST_CASE("analyze reports a missing peak with status 2") {
  const fs::path dir = scratch("flat");
  Trajectory t;
  t.sample_rate = 496;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1e-9);
  for (int i = 0; i < 2000; ++i) t.samples.push_back({0.0, g(rng), g(rng)});
  write_trajectory_csv(dir / "trial_000.csv", t);
  std::vector<SummaryRow> rows;
  CHECK(cmd_analyze(parse_config(kSmall), {dir / "trial_000.csv"}, options(scratch("flat_out")), &rows) ==
        kExitNumerical);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.find("peak") != std::string::npos);
}

TEST_CASE("track recovers rendered motion and reports dropouts") {
  const ScenarioConfig cfg = parse_config(kSmall);
  const CameraModel cam = cfg.tracking->camera;
  const fs::path frames_dir = scratch("frames");
  std::vector<Frame> frames;
  std::vector<PlanePosition> truth;
  for (int i = 0; i < 200; ++i) {
    const PlanePosition p{0.5 * std::sin(0.1 * i), 2.0 * std::cos(0.05 * i)};
    truth.push_back(p);
    frames.push_back(render_frame(cam, p, 500 + i, i == 50 || i == 120 ? 0.0 : 1.0));
  }
  StreamInfo info;
  info.width = cam.width;
  info.height = cam.height;
  info.bit_depth = 16;
  write_frame_stream(frames_dir / "cam", frames, info);

  const fs::path out = scratch("track");
  REQUIRE(cmd_track(cfg, frames_dir / "cam.json", options(out)) == kExitOk);
  CHECK(read_json(out / "track_report.json")["message"] == "2 frames filled");
  const Trajectory t = read_trajectory_csv(out / "tracked.csv");
  REQUIRE(t.size() == 200);
  double sq = 0;
  int n = 0;
  for (int i = 0; i < 200; ++i) {
    if (i == 50 || i == 120) continue;
    sq += std::pow(t.samples[i].y / constants::kMicron - truth[i].y, 2) +
          std::pow(t.samples[i].z / constants::kMicron - truth[i].z, 2);
    ++n;
  }
  CHECK(std::sqrt(sq / n) < 0.2 * cam.calibration);

  const fs::path dark = scratch("dark");
  std::vector<Frame> black;
  for (int i = 0; i < 5; ++i) black.push_back(render_frame(cam, {0, 0}, i, 0.0));
  write_frame_stream(dark / "cam", black, info);
  std::ostringstream err;
  CHECK(guarded(err, [&] { return cmd_track(cfg, dark / "cam.json", options(scratch("dark_out"))); }) ==
        kExitNumerical);
  CHECK(guarded(err, [&] { return cmd_track(cfg, dark / "nothing.json", options(scratch("none_out"))); }) ==
        kExitInput);
}

TEST_CASE("command-line exit statuses") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "ok.yaml") << kSmall;
  std::ofstream(dir / "nofz.yaml") << "trap:\n  measured: {fx_hz: 104, fy_hz: 130}\n";
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("fit-trap --config " + (dir / "ok.yaml").string() + " --out " + (dir / "o1").string()) == 0);
  CHECK(run_cli("fit-trap --config " + (dir / "nofz.yaml").string() + " --out " + (dir / "o2").string()) == 1);
  CHECK(run_cli("fit-trap --config " + (dir / "missing.yaml").string()) == 1);
  CHECK(run_cli("no-such-command") == 1);
}
