#include "mgtrap/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mgtrap/errors.hpp"

namespace mgtrap {
namespace {

using Image = std::vector<float>;

std::vector<float> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Running-sum boxcar of width 2r+1 along rows then columns, edges clamped.
Image boxcar(const Image& in, int w, int h, int r) {
  const float norm = 1.0f / static_cast<float>(2 * r + 1);
  Image tmp(in.size()), out(in.size());
  for (int row = 0; row < h; ++row) {
    const float* src = &in[static_cast<std::size_t>(row) * w];
    double s = 0.0;
    for (int k = -r; k <= r; ++k) s += src[std::clamp(k, 0, w - 1)];
    for (int col = 0; col < w; ++col) {
      tmp[static_cast<std::size_t>(row) * w + col] = static_cast<float>(s) * norm;
      s += src[std::min(col + r + 1, w - 1)] - src[std::max(col - r, 0)];
    }
  }
  for (int col = 0; col < w; ++col) {
    double s = 0.0;
    for (int k = -r; k <= r; ++k) s += tmp[static_cast<std::size_t>(std::clamp(k, 0, h - 1)) * w + col];
    for (int row = 0; row < h; ++row) {
      out[static_cast<std::size_t>(row) * w + col] = static_cast<float>(s) * norm;
      s += tmp[static_cast<std::size_t>(std::min(row + r + 1, h - 1)) * w + col] -
           tmp[static_cast<std::size_t>(std::max(row - r, 0)) * w + col];
    }
  }
  return out;
}

// Gaussian blur of the window [r0, r1] x [c0, c1] (inclusive), computed
// with the same edge clamping as a full-frame convolution.
Image blur_window(const Frame& f, int r0, int r1, int c0, int c1, const std::vector<float>& kernel) {
  const int k = static_cast<int>(kernel.size() / 2);
  const int w = f.width, h = f.height;
  const int rows = r1 - r0 + 1, cols = c1 - c0 + 1;
  const int er0 = std::max(0, r0 - k), er1 = std::min(h - 1, r1 + k);
  Image tmp(static_cast<std::size_t>(er1 - er0 + 1) * cols);
  for (int row = er0; row <= er1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      float s = 0.0f;
      for (int j = -k; j <= k; ++j) {
        s += kernel[static_cast<std::size_t>(j + k)] * f.at(row, std::clamp(col + j, 0, w - 1));
      }
      tmp[static_cast<std::size_t>(row - er0) * cols + (col - c0)] = s;
    }
  }
  Image out(static_cast<std::size_t>(rows) * cols);
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      float s = 0.0f;
      for (int j = -k; j <= k; ++j) {
        const int rr = std::clamp(row + j, 0, h - 1);
        s += kernel[static_cast<std::size_t>(j + k)] * tmp[static_cast<std::size_t>(rr - er0) * cols + (col - c0)];
      }
      out[static_cast<std::size_t>(row - r0) * cols + (col - c0)] = s;
    }
  }
  return out;
}

}  // namespace

void Frame::validate() const {
  if (width < 16 || height < 16) throw InputError("frame must be at least 16x16 pixels");
  if (intensity.size() != static_cast<std::size_t>(width) * height) {
    throw InputError("frame intensity size does not match its dimensions");
  }
  for (float v : intensity) {
    if (!std::isfinite(v) || v < 0.0f) throw NonFiniteError("frame intensities must be finite and >= 0");
  }
}

void CameraModel::validate() const {
  if (width < 16 || height < 16) throw ConfigError("camera frame must be at least 16x16 pixels");
  if (!(calibration > 0.0)) throw ConfigError("camera calibration must be positive");
  if (!(psf_sigma > 0.0)) throw ConfigError("psf sigma must be positive");
  if (!(background_std >= 0.0) || !(background_mean >= 0.0) || !(peak_counts >= 0.0)) {
    throw ConfigError("camera intensities must be non-negative");
  }
}

int CameraModel::radius() const {
  return feature_radius > 0 ? feature_radius : static_cast<int>(std::ceil(3.0 * psf_sigma));
}

double to_row(const CameraModel& cam, double y_um) { return cam.center_row - y_um / cam.calibration; }
double to_col(const CameraModel& cam, double z_um) { return cam.center_col + z_um / cam.calibration; }

Frame render_frame(const CameraModel& cam, PlanePosition true_pos, std::uint64_t seed, double brightness) {
  cam.validate();
  const double r0 = to_row(cam, true_pos.y);
  const double c0 = to_col(cam, true_pos.z);
  if (!(r0 >= 0.0 && r0 <= cam.height - 1 && c0 >= 0.0 && c0 <= cam.width - 1)) {
    throw OutOfField("particle image lies outside the camera field of view");
  }
  Frame f;
  f.width = cam.width;
  f.height = cam.height;
  f.intensity.resize(static_cast<std::size_t>(cam.width) * cam.height);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inv2s2 = 0.5 / (cam.psf_sigma * cam.psf_sigma);
  const double amp = cam.peak_counts * brightness;
  std::vector<double> row_profile(static_cast<std::size_t>(cam.height));
  std::vector<double> col_profile(static_cast<std::size_t>(cam.width));
  for (int row = 0; row < cam.height; ++row) row_profile[row] = amp * std::exp(-(row - r0) * (row - r0) * inv2s2);
  for (int col = 0; col < cam.width; ++col) col_profile[col] = std::exp(-(col - c0) * (col - c0) * inv2s2);
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      double v = cam.background_mean + row_profile[row] * col_profile[col];
      if (cam.background_std > 0.0) v += cam.background_std * normal(rng);
      f.intensity[static_cast<std::size_t>(row) * cam.width + col] = static_cast<float>(std::max(0.0, v));
    }
  }
  return f;
}

std::optional<Located> locate(const Frame& frame, const CameraModel& cam, double min_mass) {
  frame.validate();
  static const std::vector<float> kernel = gaussian_kernel(1.0);
  const int radius = cam.radius();
  const int w = frame.width, h = frame.height;

  // Candidate: brightest pixel of a lightly smoothed, background-subtracted image.
  const Image background = boxcar(frame.intensity, w, h, radius);
  const Image smooth = boxcar(frame.intensity, w, h, 1);
  std::size_t best = 0;
  float best_v = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    const float v = smooth[i] - background[i];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (!(best_v > 0.0f)) return std::nullopt;
  double row = static_cast<double>(best / static_cast<std::size_t>(w));
  double col = static_cast<double>(best % static_cast<std::size_t>(w));

  // Bandpassed image (blur minus boxcar, clipped at zero) around the candidate.
  const int margin = 2 * radius;
  const int r0 = std::max(0, static_cast<int>(row) - margin), r1 = std::min(h - 1, static_cast<int>(row) + margin);
  const int c0 = std::max(0, static_cast<int>(col) - margin), c1 = std::min(w - 1, static_cast<int>(col) + margin);
  const int cols = c1 - c0 + 1;
  Image filt = blur_window(frame, r0, r1, c0, c1, kernel);
  for (int rr = r0; rr <= r1; ++rr) {
    for (int cc = c0; cc <= c1; ++cc) {
      float& v = filt[static_cast<std::size_t>(rr - r0) * cols + (cc - c0)];
      v = std::max(0.0f, v - background[static_cast<std::size_t>(rr) * w + cc]);
    }
  }

  const double r2max = static_cast<double>(radius) * radius;
  double mass = 0.0;
  for (int iter = 0; iter < 30; ++iter) {
    double sw = 0.0, sr = 0.0, sc = 0.0;
    const int lo_r = std::max(r0, static_cast<int>(std::floor(row - radius)));
    const int hi_r = std::min(r1, static_cast<int>(std::ceil(row + radius)));
    const int lo_c = std::max(c0, static_cast<int>(std::floor(col - radius)));
    const int hi_c = std::min(c1, static_cast<int>(std::ceil(col + radius)));
    for (int rr = lo_r; rr <= hi_r; ++rr) {
      for (int cc = lo_c; cc <= hi_c; ++cc) {
        const double d2 = (rr - row) * (rr - row) + (cc - col) * (cc - col);
        if (d2 > r2max) continue;
        const double v = filt[static_cast<std::size_t>(rr - r0) * cols + (cc - c0)];
        sw += v;
        sr += v * rr;
        sc += v * cc;
      }
    }
    mass = sw;
    if (sw <= 0.0) return std::nullopt;
    const double new_row = sr / sw, new_col = sc / sw;
    const double shift = std::hypot(new_row - row, new_col - col);
    row = new_row;
    col = new_col;
    if (shift < 1e-5) break;
  }
  if (mass < min_mass) return std::nullopt;

  Located out;
  out.row = row;
  out.col = col;
  out.mass = mass;
  out.pos = {(cam.center_row - row) * cam.calibration, (col - cam.center_col) * cam.calibration};
  return out;
}

std::size_t TrackedTrajectory::missing() const {
  return static_cast<std::size_t>(
      std::count_if(positions.begin(), positions.end(), [](const Entry& e) { return !e.found; }));
}

TrackedTrajectory fill_missing(const TrackedTrajectory& track) {
  double sy = 0.0, sz = 0.0;
  std::size_t n = 0;
  for (const auto& e : track.positions) {
    if (!e.found) continue;
    sy += e.pos.y;
    sz += e.pos.z;
    ++n;
  }
  if (n == 0) throw AllMissing("particle was not located in any frame");
  const PlanePosition mean{sy / static_cast<double>(n), sz / static_cast<double>(n)};
  TrackedTrajectory out = track;
  for (auto& e : out.positions)
    if (!e.found) e.pos = mean;
  out.fill_policy_applied = true;
  return out;
}

}  // namespace mgtrap
