#pragma once

#include <vector>

#include "mgtrap/field_model.hpp"
#include "mgtrap/vec3.hpp"

namespace mgtrap {

struct Material {
  double chi = -2.2e-5;  // SI volume susceptibility, < 0 for diamagnets
  double rho = 3500.0;   // kg / m^3

  void validate() const;
};

/// Diamond literature values.
inline constexpr Material kDiamond{-2.2e-5, 3500.0};

struct Particle {
  Material material = kDiamond;
  double mass = 28e-15;  // kg

  double volume() const { return mass / material.rho; }
  void validate() const;
};

struct TrapModel {
  MultipoleCoefficients coeffs;
  Material material = kDiamond;
};

/// Undamped normal-mode frequencies in Hz.
struct ModeFrequencies {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;

  double operator[](int i) const { return i == 0 ? fx : (i == 1 ? fy : fz); }
};

/// U = -chi |B|^2 V / (2 mu0) + m g y, in joules.
double potential_energy(const TrapModel& t, const Particle& particle, const Vec3& pos);

/// Force per unit mass, -grad(U)/m, in m/s^2. Independent of particle size.
Vec3 specific_force(const TrapModel& t, const Vec3& pos);

/// Hessian of U/m in s^-2.
Mat3 specific_stiffness(const TrapModel& t, const Vec3& pos);

/// g - chi/(2 rho mu0) d|B|^2/dy on the vertical axis; zero at equilibrium.
double levitation_residual(const TrapModel& t, double y);

/// Vertical equilibrium position y_eq on the axis x = z = 0.
///
/// Brackets sign changes of the levitation residual in (-0.9 y0, -1 nm),
/// keeps roots with restoring curvature, refines by bisection and returns
/// the root closest to the trap centre. Throws NoEquilibrium when there is
/// no such root and Unstable when the 3D stiffness there has a negative
/// eigenvalue.
double find_equilibrium(const TrapModel& t);

/// Equilibrium together with its stiffness matrix and mode frequencies.
struct EquilibriumInfo {
  double y_eq = 0.0;
  Mat3 stiffness = Mat3::Zero();  // Hessian of U/m, s^-2
  ModeFrequencies freqs;
  double b_eq = 0.0;              // |B| at the equilibrium, tesla
  double max_coupling = 0.0;      // max |off-diagonal| / min diagonal of stiffness
};

EquilibriumInfo analyze_equilibrium(const TrapModel& t);

/// Mode frequencies from the stiffness diagonal at the equilibrium.
/// Throws ImaginaryFrequency if any curvature is <= 0.
ModeFrequencies mode_frequencies(const TrapModel& t);

/// Convenience overload; the result does not depend on the particle mass.
ModeFrequencies mode_frequencies(const TrapModel& t, const Particle& particle);

struct CoefficientSolution {
  MultipoleCoefficients coeffs;
  double y_eq = 0.0;
  double residual_norm = 0.0;
};

struct CoefficientFit {
  CoefficientSolution best;
  /// Other distinct converged solutions found by the multistart, if any.
  std::vector<CoefficientSolution> alternatives;
  int starts_converged = 0;

  bool ambiguous() const { return !alternatives.empty(); }
};

struct CoefficientFitOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
};

/// Solves force balance plus the three frequency equations for
/// (a2, a3, a4, y_eq) with a multistart Levenberg-Marquardt. Among distinct
/// solutions whose equilibrium is reproduced by find_equilibrium, the one
/// with the smallest |y_eq| is returned as best; the others are listed.
/// Throws NoConvergence when no start converges.
CoefficientFit fit_coefficients(const ModeFrequencies& measured, const Material& material, double y0,
                                const CoefficientFitOptions& options = {});

/// Residual vector used by fit_coefficients: force balance scaled by g and
/// squared-frequency mismatch relative to the targets.
std::vector<double> coefficient_residuals(const ModeFrequencies& measured, const Material& material,
                                          const MultipoleCoefficients& coeffs, double y_eq);

}  // namespace mgtrap
