#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mgtrap {

/// Grayscale camera image; intensity is row-major, rows top to bottom.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<float> intensity;
  double timestamp = 0.0;  // s

  float at(int row, int col) const { return intensity[static_cast<std::size_t>(row) * width + col]; }
  void validate() const;
};

/// Synthetic camera looking along x: columns follow z (axial), rows follow
/// y (vertical, up is towards row 0). The trap position (y, z) = (0, 0)
/// images onto the pixel coordinate (center_row, center_col).
struct CameraModel {
  int width = 256;
  int height = 64;
  double calibration = 0.259;  // um per pixel
  double psf_sigma = 2.0;      // px
  double peak_counts = 100.0;
  double background_mean = 10.0;
  double background_std = 10.0;
  double center_row = 31.5;
  double center_col = 127.5;
  /// Feature radius used by locate(), px; 0 picks ceil(3 psf_sigma).
  int feature_radius = 0;

  void validate() const;
  int radius() const;
};

/// Position in the camera plane, micrometres.
struct PlanePosition {
  double y = 0.0;
  double z = 0.0;
};

/// Gaussian spot of width psf_sigma and height peak_counts (scaled by
/// `brightness`) over a Gaussian background. Deterministic per seed. Throws
/// OutOfField when the spot centre falls outside the image.
Frame render_frame(const CameraModel& cam, PlanePosition true_pos, std::uint64_t seed,
                   double brightness = 1.0);

struct Located {
  PlanePosition pos;  // um
  double row = 0.0;   // px
  double col = 0.0;   // px
  double mass = 0.0;  // integrated filtered brightness, counts
};

/// Crocker-Grier style localisation: Gaussian-minus-boxcar bandpass, brightest
/// local maximum, then iterated brightness-weighted centroid in a circular
/// mask. Returns nullopt when the integrated brightness is below min_mass.
std::optional<Located> locate(const Frame& frame, const CameraModel& cam, double min_mass);

struct TrackedTrajectory {
  struct Entry {
    PlanePosition pos;
    bool found = false;
  };
  std::vector<Entry> positions;
  bool fill_policy_applied = false;

  std::size_t missing() const;
};

/// Replaces every missing entry by the mean of the found positions; found
/// flags are kept for audit. Throws AllMissing when nothing was found.
TrackedTrajectory fill_missing(const TrackedTrajectory& track);

/// Pixel coordinates of a plane position.
double to_row(const CameraModel& cam, double y_um);
double to_col(const CameraModel& cam, double z_um);

}  // namespace mgtrap
