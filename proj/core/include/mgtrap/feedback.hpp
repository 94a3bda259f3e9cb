#pragma once

#include <array>
#include <deque>
#include <optional>

namespace mgtrap {

/// Cold-damping controller settings for one axis.
struct AxisFeedback {
  bool enabled = false;
  double center_freq = 10.0;       // Hz
  double bandwidth = 5.0;          // Hz
  double gain = 0.0;               // N s / m, force per unit velocity at center_freq
  std::optional<int> extra_delay;  // samples; default realises a +90 degree shift
  double force_max = 1e-9;         // N, saturation of the drive
  double detection_noise_std = 0;  // m, white readout noise on this axis
  double projection_weight = 1.0;  // coupling of the shared drive onto this axis

  void validate() const;
};

enum class FeedbackMode {
  /// Bandpass + delay controller running on the noisy measured positions.
  Bandpass,
  /// Oracle mode: force = -gain * true velocity, applied continuously.
  IdealVelocity,
};

struct FeedbackConfig {
  FeedbackMode mode = FeedbackMode::Bandpass;
  std::array<AxisFeedback, 3> axes{};  // x, y, z
  /// Quadratic readout distortion on x (1/m): x_meas = x + q x^2. Off at 0.
  double transverse_nonlinearity = 0.0;

  bool any_enabled() const {
    return axes[0].enabled || axes[1].enabled || axes[2].enabled;
  }
};

/// Second-order IIR bandpass with unit gain and zero phase at the center
/// frequency (direct form I).
class BiquadBandpass {
 public:
  BiquadBandpass(double center_freq, double bandwidth, double sample_rate);

  double step(double in);
  void reset();

 private:
  double b0_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

/// Delay, in samples, that turns the bandpass output into a velocity proxy:
/// a quarter-period lag at center_freq, less the half sample of zero-order
/// hold. Combined with a sign inversion this is the +90 degree lead of a
/// derivative while keeping the loop delay short.
int default_feedback_delay(double center_freq, double sample_rate);

/// One axis of the cold-damping loop: bandpass, delay, gain, saturation.
///
/// step() maps a measured position sample to a force sample
///   F[n] = clamp(gain * 2 pi f_c * bp(x)[n - D], +-force_max)
/// which for a sinusoid at f_c equals -gain * velocity.
class FeedbackChannel {
 public:
  FeedbackChannel(const AxisFeedback& cfg, double sample_rate);

  double step(double measured_position);
  int delay() const { return delay_; }

 private:
  AxisFeedback cfg_;
  BiquadBandpass filter_;
  int delay_;
  std::deque<double> line_;
  double scale_;
};

}  // namespace mgtrap
