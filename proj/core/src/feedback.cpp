#include "mgtrap/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"

namespace mgtrap {

using constants::kPi;

void AxisFeedback::validate() const {
  if (!enabled) return;
  if (!(center_freq > 0.0)) throw ConfigError("feedback center frequency must be positive");
  if (!(bandwidth > 0.0)) throw ConfigError("feedback bandwidth must be positive");
  if (!(gain >= 0.0)) throw ConfigError("feedback gain must be non-negative");
  if (!(force_max > 0.0)) throw ConfigError("feedback force_max must be positive");
  if (!(detection_noise_std >= 0.0)) throw ConfigError("detection noise must be non-negative");
  if (extra_delay && *extra_delay < 0) throw ConfigError("feedback delay must be non-negative");
}

BiquadBandpass::BiquadBandpass(double center_freq, double bandwidth, double sample_rate) {
  if (!(center_freq > 0.0 && center_freq < 0.5 * sample_rate)) {
    throw ConfigError("bandpass center frequency must lie below the Nyquist frequency");
  }
  const double w0 = 2.0 * kPi * center_freq / sample_rate;
  const double q = center_freq / bandwidth;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  b0_ = alpha / a0;
  b2_ = -alpha / a0;
  a1_ = -2.0 * std::cos(w0) / a0;
  a2_ = (1.0 - alpha) / a0;
}

double BiquadBandpass::step(double in) {
  const double out = b0_ * in + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
  x2_ = x1_;
  x1_ = in;
  y2_ = y1_;
  y1_ = out;
  return out;
}

void BiquadBandpass::reset() { x1_ = x2_ = y1_ = y2_ = 0.0; }

int default_feedback_delay(double center_freq, double sample_rate) {
  return std::max(0, static_cast<int>(std::lround(0.25 * sample_rate / center_freq - 0.5)));
}

FeedbackChannel::FeedbackChannel(const AxisFeedback& cfg, double sample_rate)
    : cfg_(cfg),
      filter_(cfg.center_freq, cfg.bandwidth, sample_rate),
      delay_(cfg.extra_delay.value_or(default_feedback_delay(cfg.center_freq, sample_rate))),
      line_(static_cast<std::size_t>(delay_), 0.0),
      scale_(cfg.gain * 2.0 * kPi * cfg.center_freq) {
  cfg_.validate();
}

double FeedbackChannel::step(double measured_position) {
  double v = filter_.step(measured_position);
  if (delay_ > 0) {
    line_.push_back(v);
    v = line_.front();
    line_.pop_front();
  }
  return std::clamp(scale_ * v, -cfg_.force_max, cfg_.force_max);
}

}  // namespace mgtrap
