#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mgtrap/feedback.hpp"
#include "mgtrap/trap_statics.hpp"
#include "mgtrap/vec3.hpp"

namespace mgtrap {

struct GasEnvironment {
  double pressure = 5.3e-2;     // mbar
  double temperature = 295.0;   // K
  double kappa = 63.0;          // Hz / mbar

  void validate() const;
};

/// Gas damping linewidth Gamma_f0 = kappa * pressure, in Hz. The velocity
/// damping rate in the equation of motion is 2 pi Gamma_f0.
double damping_rate(const GasEnvironment& gas);

/// Uniformly sampled positions (or forces) with a start time.
struct Trajectory {
  double sample_rate = 0.0;  // Hz
  double t0 = 0.0;           // s
  std::vector<Vec3> samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
  /// One coordinate as a series, scaled by `scale` (e.g. 1e6 for micrometres).
  std::vector<double> component(Axis a, double scale = 1.0) const;
  void validate() const;
};

enum class PotentialModel { Full, Harmonic };

struct InitialState {
  enum class Kind { Thermal, Explicit } kind = Kind::Thermal;
  Vec3 displacement;  // from the equilibrium, m (Explicit)
  Vec3 velocity;      // m/s (Explicit)
};

struct SimConfig {
  double duration = 1.0;       // s, recorded span
  double dt = 1e-4;            // s, integrator step
  double output_rate = 500.0;  // Hz, recording and controller rate
  double warmup = 0.0;         // s integrated before recording starts
  std::uint64_t seed = 1;
  InitialState initial;
  PotentialModel potential = PotentialModel::Full;
  double line_noise_amplitude = 0.0;  // N, on the y axis
  double line_noise_freq = 120.0;     // Hz

  /// Integrator steps per recorded sample; throws ConfigError unless
  /// 1 / (output_rate dt) is a positive integer.
  int steps_per_sample() const;
};

struct SimResult {
  Trajectory truth;
  Trajectory measured;  // truth + readout noise, what the controller sees
  Trajectory force;     // feedback force applied after each sample, N
  double y_eq = 0.0;
  ModeFrequencies freqs;
};

/// Sinusoidal mains pickup force.
double line_noise(double t, double amplitude, double freq = 120.0);

/// Integrates m r'' = -grad U - m gamma r' + F_fb + F_line + thermal noise with
/// a BAOAB splitting (half kick, half drift, exact Ornstein-Uhlenbeck
/// velocity update, half drift, half kick).
///
/// The controller runs at output_rate on measured positions and its output is
/// held until the next sample. Throws ConfigError when dt is too coarse for
/// the fastest mode (dt > 1/(50 f_max)) and Escape when |r| exceeds y0.
SimResult simulate(const TrapModel& trap, const Particle& particle, const GasEnvironment& gas,
                   const FeedbackConfig& fb, const SimConfig& cfg);

}  // namespace mgtrap
