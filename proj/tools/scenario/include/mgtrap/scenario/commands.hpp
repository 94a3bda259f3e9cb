#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgtrap/scenario/config.hpp"
#include "mgtrap/spectra.hpp"

namespace mgtrap::scenario {

/// Process exit statuses shared by every command.
enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumerical = 2 };

struct RunOptions {
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int threads = 1;
  bool svg = false;
  std::ostream* log = nullptr;  // progress and reports; nullptr is silent
};

/// Fits multipole coefficients to trap.measured and writes coefficients.json.
int cmd_fit_trap(const ScenarioConfig& cfg, const RunOptions& opts);

/// Writes p<k>/trial_NNN.csv (true positions), trial_NNN_measured.csv (when
/// detection noise is configured), trial_NNN_force.csv (when feedback is on),
/// p<k>/run.json and manifest.json. Trial i of pressure k uses seed
/// seed + k n_trials + i. Escaping trials are reported without stopping the
/// others and make the status kExitNumerical.
int cmd_simulate(const ScenarioConfig& cfg, const RunOptions& opts);

/// One summary line: a fitted axis for one pressure group.
struct SummaryRow {
  std::string group;
  std::optional<double> pressure;  // mbar
  Axis axis = Axis::Z;
  std::optional<PsdFit> fit;
  std::optional<CalibrationResult> mass;         // kg
  std::optional<CalibrationResult> temperature;  // K
  bool mass_assumed = false;
  bool temperature_assumed = false;
  std::string error;
};

/// Analyses trajectory CSV files or simulate output directories: per group
/// and axis a trial-averaged PSD, a fit and a calibration row. Writes
/// psd_<group>_<axis>.csv, fit_<group>_<axis>.json and summary.csv.
/// Failed axes are recorded and make the status kExitNumerical.
int cmd_analyze(const ScenarioConfig& cfg, const std::vector<std::filesystem::path>& inputs, const RunOptions& opts,
                std::vector<SummaryRow>* rows = nullptr);

/// Locates the particle in every frame of a PGM directory or raw stream and
/// writes tracked.csv (t, x_um = 0, y_um, z_um) and track_report.json.
int cmd_track(const ScenarioConfig& cfg, const std::filesystem::path& source, const RunOptions& opts);

/// Built-in reproduction scenario, optionally overridden by YAML text.
int cmd_reproduce_paper(const std::string& override_yaml, const RunOptions& opts);

/// The built-in scenarios used by reproduce-paper.
const std::string& builtin_rough_vacuum_yaml();
const std::string& builtin_high_vacuum_yaml();

/// Runs a command and maps exceptions to exit statuses, printing the message
/// to `err`.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn);

std::string tool_version();

}  // namespace mgtrap::scenario

#include "mgtrap/scenario/detail/guarded.hpp"
