#pragma once

#include "mgtrap/vec3.hpp"

namespace mgtrap {

/// Strengths of the three retained multipole terms of the trap field.
///
/// a2, a3 and a4 are in tesla (quadrupole, hexapole, octopole). y0 is the
/// distance from the trap centre to the upper or lower pole pieces and sets
/// the length scale of the expansion.
struct MultipoleCoefficients {
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double y0 = 75e-6;

  /// Throws InputError unless y0 > 0 and every value is finite.
  void validate() const;
};

/// The three real spherical harmonics used by the expansion.
enum class Harmonic { Y2m2, Y31, Y4m4 };

int degree(Harmonic h);

/// Angular value Y(x/r, y/r, z/r). Defined as 0 at the origin, where the
/// angular function has no limit.
double real_harmonic(Harmonic h, const Vec3& pos);

/// r^l * Y, a homogeneous polynomial of degree l that is finite everywhere.
double solid_harmonic(Harmonic h, const Vec3& pos);

/// Magnetic scalar potential in amperes.
double scalar_potential(const MultipoleCoefficients& c, const Vec3& pos);

/// B = -mu0 grad(Phi), in tesla.
Vec3 field_B(const MultipoleCoefficients& c, const Vec3& pos);

/// |B|^2 in T^2.
double b_squared(const MultipoleCoefficients& c, const Vec3& pos);

/// Gradient of |B|^2 in T^2/m.
Vec3 grad_b_squared(const MultipoleCoefficients& c, const Vec3& pos);

/// Hessian of |B|^2 in T^2/m^2.
Mat3 hess_b_squared(const MultipoleCoefficients& c, const Vec3& pos);

/// Pure-quadrupole field gradient K = a2 c2 / (2 y0) in T/m, so that
/// |B| = |K| sqrt(x^2 + y^2) when a3 = a4 = 0.
double quadrupole_gradient(const MultipoleCoefficients& c);

}  // namespace mgtrap
