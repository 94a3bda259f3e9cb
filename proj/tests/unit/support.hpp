#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mgtrap/constants.hpp"
#include "mgtrap/dynamics.hpp"
#include "mgtrap/field_model.hpp"
#include "mgtrap/trap_statics.hpp"

namespace testsupport {

inline mgtrap::MultipoleCoefficients reference_coeffs() { return {-1.3, 0.018, 0.72, 75e-6}; }
inline mgtrap::MultipoleCoefficients quadrupole_coeffs() { return {-1.3, 0.0, 0.0, 75e-6}; }
inline mgtrap::TrapModel reference_trap() { return {reference_coeffs(), mgtrap::kDiamond}; }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

/// Equipartition temperature of one axis: m w^2 <x^2> / kB.
inline double axis_temperature(const mgtrap::Trajectory& t, mgtrap::Axis a, double mass, double freq) {
  const double w = 2 * mgtrap::constants::kPi * freq;
  return mass * w * w * variance(t.component(a)) / mgtrap::constants::kBoltzmann;
}

}  // namespace testsupport
