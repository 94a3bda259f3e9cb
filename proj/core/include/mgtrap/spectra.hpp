#pragma once

#include <span>
#include <utility>
#include <vector>

namespace mgtrap {

/// One-sided power spectral density. Values are in (input unit)^2 / Hz;
/// the analysis pipeline feeds micrometres, giving um^2/Hz.
struct PsdEstimate {
  std::vector<double> freqs;      // Hz, bin centres k * fs / N
  std::vector<double> values;
  std::vector<double> point_std;  // standard error of each point; empty or 0 for a single trial
  int n_trials = 1;
  double sample_rate = 0.0;

  double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  bool has_weights() const;
};

/// The damped-oscillator spectrum S0 f0^2 G / ((f0^2 - f^2)^2 + f^2 G^2).
double lorentzian_psd(double f, double f0, double gamma, double s0);

/// Mean-removed one-sided periodogram normalised so that
/// sum(values) * df equals the variance of the input.
/// Throws LengthError below 256 samples and NonFiniteError on NaN/inf.
PsdEstimate periodogram(std::span<const double> series, double sample_rate);

/// Pointwise mean over trials; point_std = sample std / sqrt(n).
/// Throws GridMismatch when the frequency grids differ.
PsdEstimate average_trials(std::span<const PsdEstimate> psds);

struct FrequencyBand {
  double lo = 0.0;
  double hi = 0.0;
};

struct PsdFitOptions {
  std::vector<FrequencyBand> exclude_bands{{119.0, 121.0}};
  /// Fit window as multiples of the initial peak frequency; the upper edge
  /// is capped at Nyquist.
  double window_lo_factor = 0.25;
  double window_hi_factor = 4.0;
  bool fit_noise_floor = true;
  /// Aliased copies of the model on each side of every multiple of the
  /// sample rate; 0 fits the bare continuous spectrum.
  int alias_images = 2;
  double min_peak_ratio = 5.0;
  int max_iterations = 300;
};

struct PsdFit {
  double f0 = 0.0, f0_err = 0.0;          // Hz
  double gamma = 0.0, gamma_err = 0.0;    // Hz
  double s0 = 0.0, s0_err = 0.0;          // input unit^2 (um^2 in the pipeline)
  double noise_floor = 0.0, noise_floor_err = 0.0;
  double residual_norm = 0.0;             // sqrt(chi^2 / dof)
  int n_points = 0;
  int n_trials = 1;
  bool weighted = false;
};

/// Weighted nonlinear least squares of the damped-oscillator spectrum plus a
/// white floor. With more than one trial the weights come from the relative
/// point scatter applied to the model (iteratively reweighted); a single trial
/// is fit unweighted. Throws NoPeak when no resolvable peak exists and
/// NoConvergence when the solver fails.
PsdFit fit_psd(const PsdEstimate& psd, const PsdFitOptions& options = {});

struct CalibrationResult {
  double value = 0.0;
  double error = 0.0;
};

/// m = kB T / (2 pi^3 S0 f0^2) with S0 in um^2; mass in kg.
CalibrationResult mass_from_fit(const PsdFit& fit, double temperature);

/// T = 2 pi^3 m S0 f0^2 / kB with S0 in um^2 and m in kg; temperature in K.
CalibrationResult temperature_from_fit(const PsdFit& fit, double mass);

}  // namespace mgtrap
