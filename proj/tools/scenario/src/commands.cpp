#include "mgtrap/scenario/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "common.hpp"
#include "mgtrap/constants.hpp"
#include "mgtrap/field_model.hpp"
#include "mgtrap/frame_io.hpp"
#include "mgtrap/scenario/parallel.hpp"
#include "mgtrap/scenario/svg.hpp"
#include "mgtrap/tracking.hpp"

namespace mgtrap::scenario {

using detail::json;
using detail::Manifest;
using detail::say;
namespace fs = std::filesystem;
using constants::kMicron;
using constants::kPicogram;

std::string tool_version() { return MGTRAP_VERSION; }

namespace {

std::string trial_name(std::size_t i, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "trial_%03zu%s.csv", i, suffix);
  return buf;
}

bool is_trial_file(const fs::path& p) {
  const std::string name = p.filename().string();
  if (name.size() < 11 || name.rfind("trial_", 0) != 0 || p.extension() != ".csv") return false;
  const std::string mid = name.substr(6, name.size() - 10);
  return !mid.empty() && std::all_of(mid.begin(), mid.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Explicit coefficients win; otherwise they are fitted to the measured frequencies.
TrapModel trap_model(const ScenarioConfig& cfg) {
  if (cfg.trap.coefficients) return TrapModel{*cfg.trap.coefficients, cfg.trap.material};
  if (!cfg.trap.measured) throw ConfigError("missing key 'trap.coefficients' (or 'trap.measured')");
  return TrapModel{fit_coefficients(*cfg.trap.measured, cfg.trap.material, cfg.trap.y0).best.coeffs, cfg.trap.material};
}

json coefficients_json(const MultipoleCoefficients& c, double y_eq) {
  json j;
  j["a2_t"] = c.a2;
  j["a3_t"] = c.a3;
  j["a4_t"] = c.a4;
  j["y_eq_um"] = y_eq / kMicron;
  return j;
}

std::string csv_cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

// --------------------------------------------------------------------------- fit-trap

int cmd_fit_trap(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (!cfg.trap.measured) throw ConfigError("missing key 'trap.measured'");
  Manifest manifest{"fit-trap"};
  const CoefficientFit fit = fit_coefficients(*cfg.trap.measured, cfg.trap.material, cfg.trap.y0);
  const TrapModel model{fit.best.coeffs, cfg.trap.material};
  const EquilibriumInfo eq = analyze_equilibrium(model);

  json j = coefficients_json(fit.best.coeffs, fit.best.y_eq);
  j["y0_um"] = cfg.trap.y0 / kMicron;
  j["b_eq_tesla"] = eq.b_eq;
  j["frequencies_hz"] = {{"fx", eq.freqs.fx}, {"fy", eq.freqs.fy}, {"fz", eq.freqs.fz}};
  j["measured_hz"] = {{"fx", cfg.trap.measured->fx}, {"fy", cfg.trap.measured->fy}, {"fz", cfg.trap.measured->fz}};
  j["max_mode_coupling"] = eq.max_coupling;
  j["residual_norm"] = fit.best.residual_norm;
  j["starts_converged"] = fit.starts_converged;
  j["alternatives"] = json::array();
  for (const auto& alt : fit.alternatives) j["alternatives"].push_back(coefficients_json(alt.coeffs, alt.y_eq));

  detail::ensure_dir(opts.out);
  const fs::path file = opts.out / "coefficients.json";
  detail::write_json(file, j);
  manifest.add(opts.out, file);
  manifest.write(opts.out, cfg, cfg.seed());

  char line[256];
  std::snprintf(line, sizeof line, "a2=%.5g T  a3=%.5g T  a4=%.5g T  y_eq=%.4g um  B_eq=%.4g T%s", fit.best.coeffs.a2,
                fit.best.coeffs.a3, fit.best.coeffs.a4, fit.best.y_eq / kMicron, eq.b_eq,
                fit.ambiguous() ? "  (other solutions listed)" : "");
  say(opts, line);
  return kExitOk;
}

// --------------------------------------------------------------------------- simulate

int cmd_simulate(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (cfg.gas.pressures.empty()) throw ConfigError("missing key 'gas.pressures_mbar'");
  const TrapModel trap = trap_model(cfg);
  const Particle particle = cfg.particle();
  const std::uint64_t seed = opts.seed.value_or(cfg.seed());
  const auto n_trials = static_cast<std::size_t>(cfg.sim.n_trials);
  const bool write_measured =
      std::any_of(cfg.feedback.axes.begin(), cfg.feedback.axes.end(),
                  [](const AxisFeedback& a) { return a.detection_noise_std > 0.0; }) ||
      cfg.feedback.transverse_nonlinearity != 0.0;
  const bool write_force = cfg.feedback.any_enabled();

  Manifest manifest{"simulate"};
  int status = kExitOk;
  json failures = json::array();

  for (std::size_t k = 0; k < cfg.gas.pressures.size(); ++k) {
    const fs::path dir = opts.out / ("p" + std::to_string(k));
    detail::ensure_dir(dir);
    const GasEnvironment gas = cfg.gas.at(k);
    const std::uint64_t base = seed + k * n_trials;
    std::vector<std::string> errors(n_trials);

    parallel_for(n_trials, opts.threads, [&](std::size_t i) {
      SimConfig sc = cfg.sim.sim;
      sc.seed = base + i;
      try {
        const SimResult r = simulate(trap, particle, gas, cfg.feedback, sc);
        write_trajectory_csv(dir / trial_name(i, ""), r.truth);
        if (write_measured) write_trajectory_csv(dir / trial_name(i, "_measured"), r.measured);
        if (write_force) write_force_csv(dir / trial_name(i, "_force"), r.force);
      } catch (const Escape& e) {
        errors[i] = e.what();
      }
    });

    json run;
    run["pressure_mbar"] = gas.pressure;
    run["temperature_k"] = gas.temperature;
    run["kappa_hz_per_mbar"] = gas.kappa;
    run["gamma_gas_hz"] = damping_rate(gas);
    run["mass_pg"] = particle.mass / kPicogram;
    run["n_trials"] = n_trials;
    run["sample_rate_hz"] = cfg.sim.sim.output_rate;
    run["first_seed"] = base;
    const EquilibriumInfo eq = analyze_equilibrium(TrapModel{trap.coeffs, particle.material});
    run["y_eq_um"] = eq.y_eq / kMicron;
    run["frequencies_hz"] = {{"fx", eq.freqs.fx}, {"fy", eq.freqs.fy}, {"fz", eq.freqs.fz}};
    run["failed_trials"] = json::array();
    std::size_t n_failed = 0;
    for (std::size_t i = 0; i < n_trials; ++i) {
      if (errors[i].empty()) {
        manifest.add(opts.out, dir / trial_name(i, ""));
        if (write_measured) manifest.add(opts.out, dir / trial_name(i, "_measured"));
        if (write_force) manifest.add(opts.out, dir / trial_name(i, "_force"));
      } else {
        ++n_failed;
        run["failed_trials"].push_back({{"trial", i}, {"error", errors[i]}});
        failures.push_back({{"pressure_index", k}, {"trial", i}, {"error", errors[i]}});
        say(opts, "trial " + std::to_string(i) + " at p" + std::to_string(k) + " failed: " + errors[i]);
        status = kExitNumerical;
      }
    }
    detail::write_json(dir / "run.json", run);
    manifest.add(opts.out, dir / "run.json");
    say(opts, "p" + std::to_string(k) + ": " + format_number(gas.pressure) + " mbar, " +
                  std::to_string(n_trials - n_failed) + "/" + std::to_string(n_trials) + " trials written");
  }

  manifest.extra["failed_trials"] = failures;
  manifest.write(opts.out, cfg, seed);
  return status;
}

// --------------------------------------------------------------------------- analyze

namespace {

struct Group {
  std::string label;
  std::optional<double> pressure;
  std::vector<fs::path> files;
};

std::vector<fs::path> trial_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_trial_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<double> group_pressure(const fs::path& dir, const ScenarioConfig& cfg) {
  const fs::path run = dir / "run.json";
  if (fs::exists(run)) {
    std::ifstream is(run);
    try {
      return json::parse(is).at("pressure_mbar").get<double>();
    } catch (const json::exception& e) {
      throw InputError(run.string() + ": " + e.what());
    }
  }
  if (cfg.gas.pressures.size() == 1) return cfg.gas.pressures.front();
  return std::nullopt;
}

std::vector<Group> resolve_groups(const std::vector<fs::path>& inputs, const ScenarioConfig& cfg) {
  std::vector<Group> groups;
  Group loose{"input", std::nullopt, {}};
  for (const auto& in : inputs) {
    if (fs::is_regular_file(in)) {
      loose.files.push_back(in);
    } else if (fs::is_directory(in)) {
      auto files = trial_files(in);
      if (!files.empty()) {
        groups.push_back({in.filename().string(), group_pressure(in, cfg), std::move(files)});
        continue;
      }
      // A simulate output root: one group per p<k> subdirectory, in index order.
      std::map<int, fs::path> subdirs;
      for (const auto& e : fs::directory_iterator(in)) {
        const std::string name = e.path().filename().string();
        if (e.is_directory() && name.size() > 1 && name[0] == 'p' &&
            std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
          subdirs[std::stoi(name.substr(1))] = e.path();
        }
      }
      if (subdirs.empty()) throw InputError("no trajectory files in " + in.string());
      for (const auto& [idx, dir] : subdirs) {
        auto sub = trial_files(dir);
        if (!sub.empty()) groups.push_back({dir.filename().string(), group_pressure(dir, cfg), std::move(sub)});
      }
    } else {
      throw InputError("input not found: " + in.string());
    }
  }
  if (!loose.files.empty()) {
    if (cfg.gas.pressures.size() == 1) loose.pressure = cfg.gas.pressures.front();
    groups.push_back(std::move(loose));
  }
  if (groups.empty()) throw InputError("no trajectories to analyse");
  return groups;
}

fs::path source_file(const fs::path& truth_file, TrajectorySource source) {
  if (source == TrajectorySource::True) return truth_file;
  fs::path measured = truth_file;
  measured.replace_filename(truth_file.stem().string() + "_measured.csv");
  return fs::exists(measured) ? measured : truth_file;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "group,pressure_mbar,axis,f0_hz,f0_err_hz,gamma_hz,gamma_err_hz,s0_um2,s0_err_um2,mass_pg,mass_err_pg,"
        "temp_k,temp_err_k,calibrated,n_trials,status\n";
  for (const auto& r : rows) {
    os << r.group << ',' << csv_cell(r.pressure) << ',' << axis_name(r.axis) << ',';
    if (r.fit) {
      const PsdFit& f = *r.fit;
      os << format_number(f.f0) << ',' << format_number(f.f0_err) << ',' << format_number(f.gamma) << ','
         << format_number(f.gamma_err) << ',' << format_number(f.s0) << ',' << format_number(f.s0_err) << ',';
    } else {
      os << ",,,,,,";
    }
    auto cal = [&](const std::optional<CalibrationResult>& c, double scale) {
      if (c) os << format_number(c->value * scale) << ',' << format_number(c->error * scale) << ',';
      else os << ",,";
    };
    cal(r.mass, 1.0 / kPicogram);
    cal(r.temperature, 1.0);
    const char* calibrated = !r.fit ? "" : (r.mass && !r.mass_assumed) ? "mass"
                                       : (r.temperature && !r.temperature_assumed) ? "temperature"
                                                                                   : "none";
    os << calibrated << ',' << (r.fit ? std::to_string(r.fit->n_trials) : "") << ',';
    std::string status = r.error.empty() ? "ok" : r.error;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    os << status << '\n';
  }
  return os.str();
}

}  // namespace

int cmd_analyze(const ScenarioConfig& cfg, const std::vector<fs::path>& inputs, const RunOptions& opts,
                std::vector<SummaryRow>* rows_out) {
  if (inputs.empty()) throw InputError("analyze needs at least one trajectory file or directory");
  const std::vector<Group> groups = resolve_groups(inputs, cfg);
  detail::ensure_dir(opts.out);
  Manifest manifest{"analyze"};
  std::vector<SummaryRow> rows;
  int status = kExitOk;

  for (const Group& g : groups) {
    std::vector<Trajectory> trajs(g.files.size());
    parallel_for(g.files.size(), opts.threads, [&](std::size_t i) {
      trajs[i] = read_trajectory_csv(source_file(g.files[i], cfg.analysis.source));
      trajs[i].validate();
    });

    const auto& axes = cfg.analysis.axes;
    std::vector<SummaryRow> group_rows(axes.size());
    std::vector<PsdEstimate> averaged(axes.size());
    parallel_for(axes.size(), opts.threads, [&](std::size_t a) {
      SummaryRow& row = group_rows[a];
      row.group = g.label;
      row.pressure = g.pressure;
      row.axis = axes[a];
      std::vector<PsdEstimate> psds;
      psds.reserve(trajs.size());
      for (const auto& t : trajs) psds.push_back(periodogram(t.component(axes[a], 1.0 / kMicron), t.sample_rate));
      averaged[a] = average_trials(psds);
      try {
        row.fit = fit_psd(averaged[a], cfg.analysis.fit);
      } catch (const NumericalError& e) {
        row.error = e.what();
        return;
      }
      const bool calibrate = std::find(cfg.analysis.calibrate_axes.begin(), cfg.analysis.calibrate_axes.end(),
                                       axes[a]) != cfg.analysis.calibrate_axes.end();
      if (!calibrate) return;
      if (cfg.analysis.calibrate == Calibrate::Mass) {
        row.mass = mass_from_fit(*row.fit, cfg.gas.temperature);
        row.temperature = CalibrationResult{cfg.gas.temperature, 0.0};
        row.temperature_assumed = true;
      } else {
        row.temperature = temperature_from_fit(*row.fit, *cfg.particle_mass);
        row.mass = CalibrationResult{*cfg.particle_mass, 0.0};
        row.mass_assumed = true;
      }
    });

    for (std::size_t a = 0; a < axes.size(); ++a) {
      const std::string stem = g.label + "_" + axis_name(axes[a]);
      const fs::path psd_file = opts.out / ("psd_" + stem + ".csv");
      write_psd_csv(psd_file, averaged[a]);
      manifest.add(opts.out, psd_file);
      const SummaryRow& row = group_rows[a];
      if (row.fit) {
        const fs::path fit_file = opts.out / ("fit_" + stem + ".json");
        write_file_atomic(fit_file, fit_to_json(*row.fit) );
        manifest.add(opts.out, fit_file);
      } else {
        status = kExitNumerical;
        say(opts, g.label + " " + axis_name(axes[a]) + ": " + row.error);
      }
      if (opts.svg) {
        std::vector<Series> series{{averaged[a].freqs, averaged[a].values, "PSD"}};
        if (row.fit) {
          Series model{{}, {}, "fit"};
          for (double f : averaged[a].freqs) {
            model.x.push_back(f);
            model.y.push_back(lorentzian_psd(f, row.fit->f0, row.fit->gamma, row.fit->s0) + row.fit->noise_floor);
          }
          series.push_back(std::move(model));
        }
        const fs::path svg_file = opts.out / ("psd_" + stem + ".svg");
        write_file_atomic(svg_file, loglog_svg(series, stem, "frequency (Hz)", "PSD (um^2/Hz)"));
        manifest.add(opts.out, svg_file);
      }
    }
    rows.insert(rows.end(), group_rows.begin(), group_rows.end());
  }

  const fs::path summary = opts.out / "summary.csv";
  write_file_atomic(summary, summary_csv(rows));
  manifest.add(opts.out, summary);
  manifest.write(opts.out, cfg, opts.seed.value_or(cfg.seed()));
  for (const auto& r : rows) {
    if (!r.fit) continue;
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %s  f0=%.4f Hz  gamma=%.4f Hz  s0=%.4g um^2%s", r.group.c_str(),
                  axis_name(r.axis), r.fit->f0, r.fit->gamma, r.fit->s0,
                  r.mass && !r.mass_assumed
                      ? ("  m=" + format_number(r.mass->value / kPicogram) + " pg").c_str()
                      : (r.temperature && !r.temperature_assumed
                             ? ("  T=" + format_number(r.temperature->value) + " K").c_str()
                             : ""));
    say(opts, line);
  }
  if (rows_out) *rows_out = std::move(rows);
  return status;
}

// --------------------------------------------------------------------------- track

int cmd_track(const ScenarioConfig& cfg, const fs::path& source, const RunOptions& opts) {
  if (!cfg.tracking) throw ConfigError("missing key 'tracking'");
  const TrackingSection& tr = *cfg.tracking;
  StreamInfo info;
  const std::vector<Frame> frames = load_frames(source, tr.fps, &info);
  if (frames.size() < 2) throw InputError("need at least two frames");
  CameraModel cam = tr.camera;
  if (source.extension() == ".json") cam.calibration = info.calibration;
  for (const auto& f : frames) {
    if (f.width != cam.width || f.height != cam.height) {
      throw InputError("frame size " + std::to_string(f.width) + "x" + std::to_string(f.height) +
                       " does not match the camera block");
    }
  }

  TrackedTrajectory track;
  track.positions.resize(frames.size());
  parallel_for(frames.size(), opts.threads, [&](std::size_t i) {
    if (auto loc = locate(frames[i], cam, tr.min_mass)) track.positions[i] = {loc->pos, true};
  });
  const std::size_t missing = track.missing();
  const TrackedTrajectory filled = fill_missing(track);

  Trajectory traj;
  traj.sample_rate = info.fps;
  traj.samples.reserve(frames.size());
  for (const auto& e : filled.positions) traj.samples.push_back(Vec3{0.0, e.pos.y * kMicron, e.pos.z * kMicron});

  detail::ensure_dir(opts.out);
  Manifest manifest{"track"};
  const fs::path csv = opts.out / "tracked.csv";
  write_trajectory_csv(csv, traj);
  manifest.add(opts.out, csv);

  const std::string message = std::to_string(missing) + " frames filled";
  json report;
  report["n_frames"] = frames.size();
  report["n_missing"] = missing;
  report["fill_policy"] = "mean of located positions";
  report["fps_hz"] = info.fps;
  report["calibration_um_per_px"] = cam.calibration;
  report["message"] = message;
  const fs::path report_file = opts.out / "track_report.json";
  detail::write_json(report_file, report);
  manifest.add(opts.out, report_file);
  manifest.write(opts.out, cfg, cfg.seed());
  say(opts, std::to_string(frames.size()) + " frames tracked, " + message);
  return kExitOk;
}

}  // namespace mgtrap::scenario
