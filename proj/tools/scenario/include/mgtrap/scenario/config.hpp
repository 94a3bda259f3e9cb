#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgtrap/dynamics.hpp"
#include "mgtrap/feedback.hpp"
#include "mgtrap/spectra.hpp"
#include "mgtrap/tracking.hpp"
#include "mgtrap/trap_statics.hpp"
#include "mgtrap/vec3.hpp"

namespace mgtrap::scenario {

struct TrapSection {
  std::optional<MultipoleCoefficients> coefficients;
  std::optional<ModeFrequencies> measured;
  double y0 = 75e-6;  // m
  Material material = kDiamond;
};

struct GasSection {
  std::vector<double> pressures;  // mbar
  double temperature = 295.0;     // K
  double kappa = 63.0;            // Hz / mbar

  GasEnvironment at(std::size_t i) const { return {pressures.at(i), temperature, kappa}; }
};

struct SimSection {
  SimConfig sim;  // seed is filled in from seed_id or the config hash
  int n_trials = 1;
  std::optional<std::uint64_t> seed_id;
};

enum class Calibrate { Mass, Temperature };
enum class TrajectorySource { True, Measured };

struct AnalysisSection {
  std::vector<Axis> axes{Axis::X, Axis::Y, Axis::Z};
  std::vector<Axis> calibrate_axes{Axis::Y, Axis::Z};  // others are frequency-only
  Calibrate calibrate = Calibrate::Mass;
  TrajectorySource source = TrajectorySource::True;
  PsdFitOptions fit;
};

struct TrackingSection {
  CameraModel camera;
  double min_mass = 400.0;  // filtered counts
  double fps = 496.0;       // Hz
  double dropout_fraction = 0.0;
  double duration = 10.0;   // s of trajectory rendered by the built-in tracking check
};

/// A parsed and validated scenario file.
struct ScenarioConfig {
  TrapSection trap;
  std::optional<double> particle_mass;  // kg; empty means "fit-from-psd"
  GasSection gas;
  FeedbackConfig feedback;
  SimSection sim;
  AnalysisSection analysis;
  std::optional<TrackingSection> tracking;

  std::string canonical;  // normalised YAML text the hash is taken over
  std::uint64_t hash = 0;

  /// Explicit seed if given, otherwise derived from the config hash.
  std::uint64_t seed() const;
  Particle particle() const;  // throws ConfigError when the mass is "fit-from-psd"
};

/// Parses YAML text. `base`, if non-empty, is parsed first and `text` is
/// merged over it key by key. Throws ConfigError naming the offending key.
ScenarioConfig parse_config(const std::string& text, const std::string& base = "");
ScenarioConfig load_config(const std::filesystem::path& path, const std::string& base = "");

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& data);

std::string hex64(std::uint64_t v);

}  // namespace mgtrap::scenario
