#include <benchmark/benchmark.h>

#include <random>

#include "mgtrap/dynamics.hpp"
#include "mgtrap/field_model.hpp"
#include "mgtrap/spectra.hpp"
#include "mgtrap/tracking.hpp"
#include "mgtrap/trap_statics.hpp"

using namespace mgtrap;

namespace {

const MultipoleCoefficients kCoeffs{-1.27, 0.018, 0.74, 75e-6};

void BM_FieldEvaluation(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20e-6, 20e-6);
  std::vector<Vec3> pts(1024);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    const Vec3& p = pts[i++ & 1023];
    benchmark::DoNotOptimize(grad_b_squared(kCoeffs, p));
  }
}
BENCHMARK(BM_FieldEvaluation);

void BM_Hessian(benchmark::State& state) {
  const Vec3 p{1e-6, -19e-6, 3e-6};
  for (auto _ : state) benchmark::DoNotOptimize(hess_b_squared(kCoeffs, p));
}
BENCHMARK(BM_Hessian);

void BM_FitCoefficients(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fit_coefficients({104, 130, 9.6}, kDiamond, 75e-6));
}
BENCHMARK(BM_FitCoefficients)->Unit(benchmark::kMillisecond);

// One simulated second at the default 20 steps per sample.
void BM_SimulateSecond(benchmark::State& state) {
  const TrapModel trap{kCoeffs, kDiamond};
  SimConfig cfg;
  cfg.duration = 1.0;
  cfg.output_rate = 496;
  cfg.dt = 1.0 / (496 * 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(trap, Particle{}, {5.3e-2, 295, 63}, {}, cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_SimulateSecond)->Unit(benchmark::kMillisecond);

void BM_Periodogram(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& x : s) x = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(periodogram(s, 496));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Periodogram)->RangeMultiplier(4)->Range(1 << 12, 1 << 16)->Unit(benchmark::kMicrosecond);

void BM_FitPsd(benchmark::State& state) {
  PsdEstimate p;
  p.sample_rate = 496;
  const std::size_t n = 29760;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    p.freqs.push_back(k * 496.0 / n);
    p.values.push_back(lorentzian_psd(p.freqs.back(), 9.64, 3.39, 24.5) + 1e-4);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_psd(p));
}
BENCHMARK(BM_FitPsd)->Unit(benchmark::kMillisecond);

void BM_Locate(benchmark::State& state) {
  const CameraModel cam;
  const Frame f = render_frame(cam, {1.3, -2.1}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(locate(f, cam, 400));
}
BENCHMARK(BM_Locate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
