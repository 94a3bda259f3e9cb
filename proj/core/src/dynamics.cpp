#include "mgtrap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"

namespace mgtrap {

using constants::kBoltzmann;
using constants::kPi;

void GasEnvironment::validate() const {
  if (!(pressure >= 0.0) || !std::isfinite(pressure)) throw ConfigError("pressure must be >= 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be > 0");
}

double damping_rate(const GasEnvironment& gas) {
  gas.validate();
  return gas.kappa * gas.pressure;
}

std::vector<double> Trajectory::component(Axis a, double scale) const {
  std::vector<double> out(samples.size());
  const int i = index(a);
  std::transform(samples.begin(), samples.end(), out.begin(), [&](const Vec3& v) { return v[i] * scale; });
  return out;
}

void Trajectory::validate() const {
  if (!(sample_rate > 0.0)) throw InputError("trajectory sample rate must be positive");
  if (samples.size() < 2) throw LengthError("trajectory needs at least two samples");
  for (const auto& s : samples) {
    if (!s.finite()) throw NonFiniteError("trajectory contains non-finite samples");
  }
}

int SimConfig::steps_per_sample() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(output_rate > 0.0)) throw ConfigError("output rate must be positive");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(warmup >= 0.0)) throw ConfigError("warmup must be non-negative");
  const double ratio = 1.0 / (output_rate * dt);
  const long n = std::lround(ratio);
  if (n < 1) throw ConfigError("output rate exceeds the integrator rate 1/dt");
  if (std::abs(ratio - static_cast<double>(n)) > 1e-6 * ratio) {
    throw ConfigError("1/(output_rate*dt) must be an integer");
  }
  return static_cast<int>(n);
}

double line_noise(double t, double amplitude, double freq) {
  return amplitude * std::sin(2.0 * kPi * freq * t);
}

SimResult simulate(const TrapModel& trap, const Particle& particle, const GasEnvironment& gas,
                   const FeedbackConfig& fb, const SimConfig& cfg) {
  particle.validate();
  gas.validate();
  for (const auto& a : fb.axes) a.validate();
  const int steps_per_sample = cfg.steps_per_sample();

  const TrapModel model{trap.coeffs, particle.material};
  const EquilibriumInfo eq = analyze_equilibrium(model);
  const double f_max = std::max({eq.freqs.fx, eq.freqs.fy, eq.freqs.fz});
  if (cfg.dt > 1.0 / (50.0 * f_max)) {
    throw ConfigError("dt=" + std::to_string(cfg.dt) + " s violates dt <= 1/(50 f_max) = " +
                      std::to_string(1.0 / (50.0 * f_max)) + " s");
  }

  const double m = particle.mass;
  const double kt = kBoltzmann * gas.temperature;
  const double gamma_gas = 2.0 * kPi * damping_rate(gas);
  const double dt = cfg.dt;
  const double half = 0.5 * dt;
  const Vec3 r_eq{0.0, eq.y_eq, 0.0};
  const double y0 = trap.coeffs.y0;

  // Independent streams so readout noise settings never perturb the thermal path.
  std::seed_seq thermal_seed{cfg.seed & 0xffffffffu, cfg.seed >> 32, std::uint64_t{0x7e1}};
  std::seed_seq readout_seed{cfg.seed & 0xffffffffu, cfg.seed >> 32, std::uint64_t{0x5e2}};
  std::mt19937_64 thermal_rng(thermal_seed);
  std::mt19937_64 readout_rng(readout_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Per-axis Ornstein-Uhlenbeck coefficients. In ideal-velocity mode the
  // feedback adds damping without adding noise.
  const bool ideal = fb.mode == FeedbackMode::IdealVelocity;
  std::array<double, 3> ou_decay{}, ou_kick{}, ideal_gamma{};
  for (int i = 0; i < 3; ++i) {
    const auto& ax = fb.axes[i];
    ideal_gamma[i] = (ideal && ax.enabled) ? ax.gain / m : 0.0;
    const double g_tot = gamma_gas + ideal_gamma[i];
    const double c1 = std::exp(-g_tot * dt);
    const double noise_var = g_tot > 0.0 ? (kt / m) * (gamma_gas / g_tot) * (1.0 - c1 * c1) : 0.0;
    ou_decay[i] = c1;
    ou_kick[i] = std::sqrt(noise_var);
  }

  auto accel = [&](const Vec3& r) -> Vec3 {
    if (cfg.potential == PotentialModel::Harmonic) {
      const Eigen::Vector3d d(r.x - r_eq.x, r.y - r_eq.y, r.z - r_eq.z);
      const Eigen::Vector3d a = -eq.stiffness * d;
      return {a(0), a(1), a(2)};
    }
    return specific_force(model, r);
  };

  Vec3 r = r_eq;
  Vec3 v;
  if (cfg.initial.kind == InitialState::Kind::Thermal) {
    for (int i = 0; i < 3; ++i) {
      r[i] += std::sqrt(kt / (m * eq.stiffness(i, i))) * normal(thermal_rng);
      v[i] = std::sqrt(kt / m) * normal(thermal_rng);
    }
  } else {
    r += cfg.initial.displacement;
    v = cfg.initial.velocity;
  }

  std::vector<FeedbackChannel> channels;
  std::array<int, 3> channel_axis{};
  if (!ideal) {
    for (int i = 0; i < 3; ++i) {
      if (fb.axes[i].enabled) {
        channel_axis[channels.size()] = i;
        channels.emplace_back(fb.axes[i], cfg.output_rate);
      }
    }
  }

  const long warm_samples = std::lround(cfg.warmup * cfg.output_rate);
  const long n_samples = std::lround(cfg.duration * cfg.output_rate);
  if (n_samples < 2) throw ConfigError("duration too short for the output rate");

  SimResult out;
  out.y_eq = eq.y_eq;
  out.freqs = eq.freqs;
  for (Trajectory* tr : {&out.truth, &out.measured, &out.force}) {
    tr->sample_rate = cfg.output_rate;
    tr->t0 = static_cast<double>(warm_samples) / cfg.output_rate;
    tr->samples.reserve(static_cast<std::size_t>(n_samples));
  }

  Vec3 f_fb;  // feedback force held between samples
  Vec3 a = accel(r);
  double t = 0.0;
  long step_index = 0;

  for (long k = 0; k < warm_samples + n_samples; ++k) {
    Vec3 meas = r;
    meas.x += fb.transverse_nonlinearity * r.x * r.x;
    for (int i = 0; i < 3; ++i) {
      const double s = fb.axes[i].detection_noise_std;
      if (s > 0.0) meas[i] += s * normal(readout_rng);
    }

    if (ideal) {
      for (int i = 0; i < 3; ++i) f_fb[i] = -m * ideal_gamma[i] * v[i];
    } else if (!channels.empty()) {
      double common = 0.0;
      for (std::size_t c = 0; c < channels.size(); ++c) common += channels[c].step(meas[channel_axis[c]]);
      for (int i = 0; i < 3; ++i) f_fb[i] = fb.axes[i].projection_weight * common;
    }

    if (k >= warm_samples) {
      out.truth.samples.push_back(r);
      out.measured.samples.push_back(meas);
      out.force.samples.push_back(f_fb);
    }

    // Ideal-velocity damping lives in the OU step, not in the kicks.
    const Vec3 f_kick = ideal ? Vec3{} : f_fb;
    for (int s = 0; s < steps_per_sample; ++s, ++step_index) {
      t = static_cast<double>(step_index) * dt;
      Vec3 ext = f_kick;
      ext.y += line_noise(t, cfg.line_noise_amplitude, cfg.line_noise_freq);
      v += (a + ext * (1.0 / m)) * half;
      r += v * half;
      for (int i = 0; i < 3; ++i) v[i] = ou_decay[i] * v[i] + ou_kick[i] * normal(thermal_rng);
      r += v * half;
      a = accel(r);
      ext = f_kick;
      ext.y += line_noise(t + dt, cfg.line_noise_amplitude, cfg.line_noise_freq);
      v += (a + ext * (1.0 / m)) * half;
      if (!(r.norm() <= y0)) {
        throw Escape("particle left the trap region at t=" + std::to_string(t + dt) + " s", t + dt);
      }
    }
  }
  return out;
}

}  // namespace mgtrap
