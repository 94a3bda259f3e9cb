#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mgtrap/dynamics.hpp"
#include "mgtrap/spectra.hpp"

namespace mgtrap {

// Text formats. Numbers are written with 10 significant digits so reruns are
// byte-identical.

/// `t,x_um,y_um,z_um`, one row per sample, positions in micrometres.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Parses the trajectory CSV; the sample rate is recovered from the time
/// column, which must be uniform. Throws InputError on malformed input.
Trajectory read_trajectory_csv(std::istream& is);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// `t,Fx,Fy,Fz` in piconewtons.
void write_force_csv(std::ostream& os, const Trajectory& force);
void write_force_csv(const std::filesystem::path& path, const Trajectory& force);

/// `freq_hz,psd_um2_per_hz,std_um2_per_hz`.
void write_psd_csv(std::ostream& os, const PsdEstimate& psd);
void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd);
PsdEstimate read_psd_csv(std::istream& is, double sample_rate, int n_trials);

/// JSON object with f0_hz, gamma_hz, s0_um2, noise_floor, uncertainties,
/// n_trials, residual_norm and weighted.
std::string fit_to_json(const PsdFit& fit, int indent = 2);
PsdFit fit_from_json(const std::string& text);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// printf-style %.10g.
std::string format_number(double v);

}  // namespace mgtrap
