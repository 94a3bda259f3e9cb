#include "mgtrap/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <fftw3.h>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/least_squares.hpp"

namespace mgtrap {

using constants::kBoltzmann;
using constants::kMicron2;
using constants::kPi;

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

bool excluded(double f, const std::vector<FrequencyBand>& bands) {
  return std::any_of(bands.begin(), bands.end(), [f](const auto& b) { return f >= b.lo && f <= b.hi; });
}

}  // namespace

bool PsdEstimate::has_weights() const {
  return n_trials >= 2 && point_std.size() == values.size() &&
         std::any_of(point_std.begin(), point_std.end(), [](double s) { return s > 0.0; });
}

double lorentzian_psd(double f, double f0, double gamma, double s0) {
  const double d = f0 * f0 - f * f;
  return s0 * f0 * f0 * gamma / (d * d + f * f * gamma * gamma);
}

PsdEstimate periodogram(std::span<const double> series, double sample_rate) {
  if (series.size() < 256) throw LengthError("periodogram needs at least 256 samples");
  if (!(sample_rate > 0.0)) throw InputError("sample rate must be positive");
  if (!std::all_of(series.begin(), series.end(), [](double v) { return std::isfinite(v); })) {
    throw NonFiniteError("periodogram input contains non-finite values");
  }
  const std::size_t n = series.size();
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);

  std::vector<double> in(n);
  std::transform(series.begin(), series.end(), in.begin(), [mean](double v) { return v - mean; });
  const std::size_t n_out = n / 2 + 1;
  auto* bins = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), bins, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  PsdEstimate out;
  out.sample_rate = sample_rate;
  out.n_trials = 1;
  out.freqs.resize(n_out);
  out.values.resize(n_out);
  const double norm = 1.0 / (static_cast<double>(n) * sample_rate);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double p = bins[k][0] * bins[k][0] + bins[k][1] * bins[k][1];
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    out.values[k] = (edge ? 1.0 : 2.0) * p * norm;
    out.freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(bins);
  return out;
}

PsdEstimate average_trials(std::span<const PsdEstimate> psds) {
  if (psds.empty()) throw InputError("no spectra to average");
  const auto& ref = psds.front();
  for (const auto& p : psds) {
    if (p.freqs.size() != ref.freqs.size() || p.sample_rate != ref.sample_rate ||
        !std::equal(p.freqs.begin(), p.freqs.end(), ref.freqs.begin())) {
      throw GridMismatch("spectra have different frequency grids");
    }
  }
  const std::size_t m = ref.freqs.size();
  const double n = static_cast<double>(psds.size());
  PsdEstimate out;
  out.freqs = ref.freqs;
  out.sample_rate = ref.sample_rate;
  out.n_trials = static_cast<int>(psds.size());
  out.values.assign(m, 0.0);
  out.point_std.assign(m, 0.0);
  for (const auto& p : psds)
    for (std::size_t k = 0; k < m; ++k) out.values[k] += p.values[k];
  for (auto& v : out.values) v /= n;
  if (psds.size() > 1) {
    for (const auto& p : psds)
      for (std::size_t k = 0; k < m; ++k) out.point_std[k] += std::pow(p.values[k] - out.values[k], 2);
    for (auto& s : out.point_std) s = std::sqrt(s / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

PsdFit fit_psd(const PsdEstimate& psd, const PsdFitOptions& options) {
  const std::size_t m = psd.freqs.size();
  if (m < 16 || psd.values.size() != m) throw LengthError("spectrum too short to fit");
  const double nyquist = 0.5 * psd.sample_rate;

  // Peak detection on a boxcar-smoothed copy, skipping DC and excluded bands.
  // The box spans about 1% of the spectrum so that single-bin excursions of a
  // raw periodogram cannot outrank a broad resonance.
  const int half_width = std::max(1, static_cast<int>(m / 200));
  std::vector<double> smooth(m, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> usable;
  for (std::size_t k = 1; k < m; ++k) {
    if (excluded(psd.freqs[k], options.exclude_bands)) continue;
    double sum = 0.0;
    int cnt = 0;
    for (int j = -half_width; j <= half_width; ++j) {
      const auto idx = static_cast<std::ptrdiff_t>(k) + j;
      if (idx < 1 || idx >= static_cast<std::ptrdiff_t>(m)) continue;
      if (excluded(psd.freqs[static_cast<std::size_t>(idx)], options.exclude_bands)) continue;
      sum += psd.values[static_cast<std::size_t>(idx)];
      ++cnt;
    }
    smooth[k] = sum / cnt;
    usable.push_back(smooth[k]);
  }
  if (usable.empty()) throw NoPeak("no usable frequency bins");
  std::size_t peak = 1;
  for (std::size_t k = 1; k < m; ++k)
    if (!std::isnan(smooth[k]) && (std::isnan(smooth[peak]) || smooth[k] > smooth[peak])) peak = k;
  const double peak_value = smooth[peak];
  const double med = median(usable);
  if (!(peak_value > 0.0) || !(peak_value > options.min_peak_ratio * med)) {
    throw NoPeak("no resolvable peak (max/median below threshold)");
  }

  // Initial guesses: peak position, half-maximum width, height * width.
  const double f_peak = psd.freqs[peak];
  auto walk = [&](int dir) {
    std::ptrdiff_t k = static_cast<std::ptrdiff_t>(peak);
    while (k > 1 && k < static_cast<std::ptrdiff_t>(m) - 1) {
      k += dir;
      const double v = smooth[static_cast<std::size_t>(k)];
      if (!std::isnan(v) && v < 0.5 * peak_value) break;
    }
    return psd.freqs[static_cast<std::size_t>(k)];
  };
  const double df = psd.bin_width();
  const double gamma0 = std::max(walk(+1) - walk(-1), 2.0 * df);
  const double scale = peak_value;  // values are fit in units of the peak height
  const double s00 = gamma0;        // S(f0) = S0 / Gamma, in scaled units

  const double f_lo = options.window_lo_factor * f_peak;
  const double f_hi = std::min(options.window_hi_factor * f_peak, nyquist);
  std::vector<double> fs, ys, rel_scatter;
  for (std::size_t k = 1; k < m; ++k) {
    const double f = psd.freqs[k];
    if (f < f_lo || f > f_hi || excluded(f, options.exclude_bands)) continue;
    fs.push_back(f);
    ys.push_back(psd.values[k] / scale);
    if (psd.has_weights() && psd.values[k] > 0.0) rel_scatter.push_back(psd.point_std[k] / psd.values[k]);
  }
  const int n_par = options.fit_noise_floor ? 4 : 3;
  const int npts = static_cast<int>(fs.size());
  if (npts <= n_par + 2) throw NoPeak("too few points in the fit window");

  double floor0 = 0.0;
  if (options.fit_noise_floor) {
    std::vector<double> tail(ys.end() - std::max<std::ptrdiff_t>(1, npts / 10), ys.end());
    floor0 = 0.5 * median(tail);
  }

  const bool weighted = psd.has_weights() && !rel_scatter.empty();
  const double rho = weighted ? median(rel_scatter) : 1.0;
  std::vector<double> sigma(static_cast<std::size_t>(npts), 1.0);

  // Instantaneously sampled motion has the continuous spectrum folded about
  // multiples of the sample rate.
  std::vector<double> images;
  for (int k = 0; k <= options.alias_images; ++k) {
    images.push_back(k * psd.sample_rate);
    if (k > 0) images.push_back(-k * psd.sample_rate);
  }
  auto model = [&](const Eigen::VectorXd& p, double f) {
    const double floor = n_par == 4 ? p(3) * p(3) : 0.0;
    double s = 0.0;
    for (double shift : images) s += lorentzian_psd(f + shift, std::exp(p(0)), std::exp(p(1)), std::exp(p(2)));
    return s + floor;
  };

  LeastSquaresProblem problem;
  problem.n_residuals = npts;
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < npts; ++i) r(i) = (model(p, fs[i]) - ys[i]) / sigma[i];
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& jac) {
    const double f0 = std::exp(p(0)), g = std::exp(p(1)), s0 = std::exp(p(2));
    for (int i = 0; i < npts; ++i) {
      double l = 0.0, dl_df0 = 0.0, dl_dg = 0.0;
      for (double shift : images) {
        const double f = fs[i] + shift;
        const double d0 = f0 * f0 - f * f;
        const double den = d0 * d0 + f * f * g * g;
        l += f0 * f0 * g / den;
        dl_df0 += 2.0 * f0 * g / den - 4.0 * f0 * f0 * f0 * g * d0 / (den * den);
        dl_dg += f0 * f0 / den - 2.0 * f0 * f0 * f * f * g * g / (den * den);
      }
      jac(i, 0) = f0 * s0 * dl_df0 / sigma[i];
      jac(i, 1) = g * s0 * dl_dg / sigma[i];
      jac(i, 2) = s0 * l / sigma[i];
      if (n_par == 4) jac(i, 3) = 2.0 * p(3) / sigma[i];
    }
  };

  Eigen::VectorXd p(n_par);
  p(0) = std::log(f_peak);
  p(1) = std::log(gamma0);
  p(2) = std::log(s00);
  if (n_par == 4) p(3) = std::sqrt(floor0);  // floor = q^2 stays non-negative

  LeastSquaresOptions lm;
  lm.max_iterations = options.max_iterations;
  lm.step_tolerance = 1e-12;
  lm.cost_tolerance = 1e-13;
  LeastSquaresResult res;
  const int passes = weighted ? 8 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    if (weighted) {
      // Periodogram scatter is proportional to the local mean, so weights
      // follow the current model rather than the noisy per-point estimate.
      for (int i = 0; i < npts; ++i) {
        const double mdl = pass == 0 ? ys[i] : model(p, fs[i]);
        sigma[static_cast<std::size_t>(i)] = rho * std::max(mdl, 1e-300);
      }
    }
    res = levenberg_marquardt(problem, p, lm);
    if (!res.params.allFinite()) break;
    const double change = (res.params.head<3>() - p.head<3>()).cwiseAbs().maxCoeff();
    p = res.params;
    if (pass > 0 && change < 1e-10) break;
  }
  if (!res.converged || !res.params.allFinite()) {
    throw NoConvergence("spectrum fit did not converge", res.residual_norm);
  }

  const int dof = std::max(1, npts - n_par);
  const double chi2 = res.residual_norm * res.residual_norm;
  Eigen::MatrixXd cov = (res.jacobian.transpose() * res.jacobian).inverse();
  if (!weighted) cov *= chi2 / dof;

  PsdFit out;
  out.f0 = std::exp(p(0));
  out.gamma = std::exp(p(1));
  out.s0 = std::exp(p(2)) * scale;
  out.f0_err = out.f0 * std::sqrt(std::max(cov(0, 0), 0.0));
  out.gamma_err = out.gamma * std::sqrt(std::max(cov(1, 1), 0.0));
  out.s0_err = out.s0 * std::sqrt(std::max(cov(2, 2), 0.0));
  if (n_par == 4) {
    out.noise_floor = p(3) * p(3) * scale;
    out.noise_floor_err = 2.0 * std::abs(p(3)) * std::sqrt(std::max(cov(3, 3), 0.0)) * scale;
  }
  out.residual_norm = std::sqrt(chi2 / dof);
  out.n_points = npts;
  out.n_trials = psd.n_trials;
  out.weighted = weighted;
  if (!(out.f0 > 0.0 && out.gamma > 0.0 && out.s0 > 0.0) || out.f0 < f_lo || out.f0 > f_hi) {
    throw NoConvergence("spectrum fit left the fit window", res.residual_norm);
  }
  return out;
}

CalibrationResult mass_from_fit(const PsdFit& fit, double temperature) {
  if (!(fit.s0 > 0.0 && fit.f0 > 0.0)) throw InputError("invalid spectrum fit");
  if (!(temperature > 0.0)) throw InputError("temperature must be positive");
  const double m = kBoltzmann * temperature / (2.0 * std::pow(kPi, 3) * fit.s0 * kMicron2 * fit.f0 * fit.f0);
  const double rel = std::hypot(fit.s0_err / fit.s0, 2.0 * fit.f0_err / fit.f0);
  return {m, m * rel};
}

CalibrationResult temperature_from_fit(const PsdFit& fit, double mass) {
  if (!(fit.s0 > 0.0 && fit.f0 > 0.0)) throw InputError("invalid spectrum fit");
  if (!(mass > 0.0)) throw InputError("mass must be positive");
  const double t = 2.0 * std::pow(kPi, 3) * mass * fit.s0 * kMicron2 * fit.f0 * fit.f0 / kBoltzmann;
  const double rel = std::hypot(fit.s0_err / fit.s0, 2.0 * fit.f0_err / fit.f0);
  return {t, t * rel};
}

}  // namespace mgtrap
