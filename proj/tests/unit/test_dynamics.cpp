#include <doctest.h>

#include <cmath>

#include "mgtrap/constants.hpp"
#include "mgtrap/dynamics.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/spectra.hpp"
#include "support.hpp"

using namespace mgtrap;
using constants::kPi;
using testsupport::axis_temperature;
using testsupport::reference_trap;

namespace {

SimConfig base_config(double duration, std::uint64_t seed) {
  SimConfig c;
  c.duration = duration;
  c.output_rate = 496;
  c.dt = 1.0 / (496 * 20);
  c.seed = seed;
  return c;
}

PsdFit fit_axis(const std::vector<SimResult>& runs, Axis a) {
  std::vector<PsdEstimate> psds;
  for (const auto& r : runs) psds.push_back(periodogram(r.truth.component(a, 1e6), r.truth.sample_rate));
  return fit_psd(average_trials(psds));
}

}  // namespace

TEST_CASE("gas damping scales with pressure") {
  CHECK(damping_rate({5.3e-2, 295, 63}) == doctest::Approx(3.339));
  CHECK(damping_rate({6.7e-3, 295, 63}) == doctest::Approx(0.4221));
  CHECK(damping_rate({0.0, 295, 63}) == 0.0);
  CHECK_THROWS_AS(damping_rate({-1.0, 295, 63}), ConfigError);
  CHECK_THROWS_AS(damping_rate({1e-2, 0.0, 63}), ConfigError);
}

TEST_CASE("noiseless release follows the damped harmonic oscillator") {
  const TrapModel trap = reference_trap();
  const GasEnvironment gas{5e-3, 1e-12, 63};
  SimConfig cfg = base_config(2.0, 1);
  cfg.potential = PotentialModel::Harmonic;
  cfg.initial.kind = InitialState::Kind::Explicit;
  cfg.initial.displacement = {0, 0, 1e-6};
  const SimResult r = simulate(trap, Particle{}, gas, FeedbackConfig{}, cfg);

  const double w0 = 2 * kPi * r.freqs.fz;
  const double g = 2 * kPi * damping_rate(gas);
  const double wd = std::sqrt(w0 * w0 - g * g / 4);
  double worst = 0;
  for (std::size_t i = 0; i < r.truth.size(); ++i) {
    const double t = r.truth.time(i);
    const double z = 1e-6 * std::exp(-g * t / 2) * (std::cos(wd * t) + g / (2 * wd) * std::sin(wd * t));
    worst = std::max(worst, std::abs(r.truth.samples[i].z - z));
  }
  CHECK(worst < 1e-2 * 1e-6);
}

TEST_CASE("thermal motion satisfies equipartition") {
  const TrapModel trap = reference_trap();
  const GasEnvironment gas{5.3e-2, 295, 63};
  Particle p;
  std::vector<SimResult> runs;
  for (int i = 0; i < 4; ++i) runs.push_back(simulate(trap, p, gas, {}, base_config(60, 100 + i)));
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    double t = 0;
    for (const auto& r : runs) t += axis_temperature(r.truth, a, p.mass, r.freqs[index(a)]) / runs.size();
    CHECK(t == doctest::Approx(295).epsilon(0.10));
  }
}

TEST_CASE("modes are resolved at their frequencies and gas linewidth") {
  const TrapModel trap = reference_trap();
  const GasEnvironment gas{5.3e-2, 295, 63};
  std::vector<SimResult> runs;
  for (int i = 0; i < 4; ++i) runs.push_back(simulate(trap, Particle{}, gas, {}, base_config(60, 200 + i)));
  const ModeFrequencies f = mode_frequencies(trap);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const PsdFit fit = fit_axis(runs, a);
    CHECK(fit.f0 == doctest::Approx(f[index(a)]).epsilon(0.01));
    CHECK(fit.gamma == doctest::Approx(damping_rate(gas)).epsilon(0.20));
  }
}

TEST_CASE("ideal velocity feedback adds linewidth") {
  const TrapModel trap = reference_trap();
  const GasEnvironment gas{6.7e-3, 295, 63};
  Particle p;
  const double gamma_gas = damping_rate(gas);
  FeedbackConfig fb;
  fb.mode = FeedbackMode::IdealVelocity;
  fb.axes[2].enabled = true;
  fb.axes[2].gain = 2 * kPi * 9 * gamma_gas * p.mass;  // total linewidth 10 Gamma_gas
  std::vector<SimResult> runs;
  for (int i = 0; i < 4; ++i) runs.push_back(simulate(trap, p, gas, fb, base_config(60, 300 + i)));
  const PsdFit fit = fit_axis(runs, Axis::Z);
  CHECK(fit.gamma == doctest::Approx(10 * gamma_gas).epsilon(0.15));
}

TEST_CASE("line noise appears at its frequency on the vertical axis") {
  const TrapModel trap = reference_trap();
  SimConfig cfg = base_config(20, 7);
  cfg.line_noise_amplitude = 5e-14;
  const SimResult r = simulate(trap, Particle{}, {5.3e-2, 295, 63}, {}, cfg);
  const PsdEstimate psd = periodogram(r.truth.component(Axis::Y, 1e6), r.truth.sample_rate);
  std::size_t k120 = 0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    if (std::abs(psd.freqs[k] - 120) < std::abs(psd.freqs[k120] - 120)) k120 = k;
  }
  double neighbours = 0;
  for (int d : {-40, -30, 30, 40}) neighbours += psd.values[k120 + d] / 4;
  CHECK(psd.values[k120] > 100 * neighbours);
  CHECK(line_noise(0.25 / 120, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("simulation is deterministic per seed") {
  const TrapModel trap = reference_trap();
  const GasEnvironment gas{5.3e-2, 295, 63};
  const SimResult a = simulate(trap, Particle{}, gas, {}, base_config(2, 11));
  const SimResult b = simulate(trap, Particle{}, gas, {}, base_config(2, 11));
  const SimResult c = simulate(trap, Particle{}, gas, {}, base_config(2, 12));
  CHECK(a.truth.samples == b.truth.samples);
  CHECK(a.truth.samples != c.truth.samples);
  CHECK(a.truth.size() == 992);
}

TEST_CASE("particle leaving the field raises Escape") {
  SimConfig cfg = base_config(1, 1);
  cfg.initial.kind = InitialState::Kind::Explicit;
  cfg.initial.velocity = {0, 0, 1.0};
  CHECK_THROWS_AS(simulate(reference_trap(), Particle{}, {5.3e-2, 295, 63}, {}, cfg), Escape);
}

TEST_CASE("integrator step validation") {
  const TrapModel trap = reference_trap();
  SimConfig cfg = base_config(1, 1);
  cfg.dt = 1e-3;  // coarser than 1/(50 f_max)
  cfg.output_rate = 500;
  CHECK_THROWS_AS(simulate(trap, Particle{}, {}, {}, cfg), ConfigError);
  cfg.dt = 1.0 / 496 / 20.5;
  cfg.output_rate = 496;
  CHECK_THROWS_AS(cfg.steps_per_sample(), ConfigError);
  cfg.dt = 1.0 / 496 / 20;
  CHECK(cfg.steps_per_sample() == 20);
}
