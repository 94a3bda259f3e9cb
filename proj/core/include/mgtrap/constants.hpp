#pragma once

#include <numbers>

namespace mgtrap::constants {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kMu0 = 1.25663706212e-6;      // T m / A
inline constexpr double kGravity = 9.80665;           // m / s^2
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K

// Unit conversions used at I/O boundaries.
inline constexpr double kMicron = 1e-6;
inline constexpr double kPicogram = 1e-15;
inline constexpr double kPiconewton = 1e-12;
inline constexpr double kMicron2 = 1e-12;

}  // namespace mgtrap::constants
