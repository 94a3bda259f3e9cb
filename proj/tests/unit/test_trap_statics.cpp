#include <doctest.h>

#include <random>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/trap_statics.hpp"
#include "support.hpp"

using namespace mgtrap;
using testsupport::quadrupole_coeffs;
using testsupport::reference_coeffs;
using testsupport::reference_trap;
using testsupport::rel_err;

namespace {
constexpr double um = 1e-6;

double analytic_quadrupole_y_eq(const TrapModel& t) {
  const double K = quadrupole_gradient(t.coeffs);
  return t.material.rho * constants::kGravity * constants::kMu0 / (t.material.chi * K * K);
}
}  // namespace

TEST_CASE("potential energy without susceptibility is pure gravity") {
  TrapModel t = reference_trap();
  t.material.chi = 0.0;
  Particle p;
  const Vec3 pos{3 * um, -7 * um, 2 * um};
  CHECK(potential_energy(t, p, pos) == doctest::Approx(p.mass * constants::kGravity * pos.y).epsilon(1e-14));
  CHECK(levitation_residual(t, -5 * um) == doctest::Approx(constants::kGravity));
}

TEST_CASE("pure quadrupole equilibrium is analytic") {
  const TrapModel t{quadrupole_coeffs(), kDiamond};
  const double y_eq = analytic_quadrupole_y_eq(t);
  CHECK(y_eq < 0);
  CHECK(std::abs(levitation_residual(t, y_eq)) < 1e-9 * constants::kGravity);
  CHECK(find_equilibrium(t) == doctest::Approx(y_eq).epsilon(1e-9));

  // Both transverse curvatures equal K^2 (-chi)/(rho mu0); the axis is flat.
  const double K = quadrupole_gradient(t.coeffs);
  const double fxy = std::sqrt(-t.material.chi / (t.material.rho * constants::kMu0)) * std::abs(K) / (2 * constants::kPi);
  const Mat3 k = specific_stiffness(t, {0, y_eq, 0});
  CHECK(std::sqrt(k(0, 0)) / (2 * constants::kPi) == doctest::Approx(fxy).epsilon(1e-9));
  CHECK(std::sqrt(k(1, 1)) / (2 * constants::kPi) == doctest::Approx(fxy).epsilon(1e-9));
  CHECK(std::abs(k(2, 2)) < 1e-9 * k(0, 0));
  CHECK_THROWS_AS(mode_frequencies(t), ImaginaryFrequency);
}

TEST_CASE("reference trap statics") {
  const TrapModel t = reference_trap();
  CHECK(std::abs(levitation_residual(t, -19 * um)) < 0.02 * constants::kGravity);
  const double y_eq = find_equilibrium(t);
  CHECK(y_eq == doctest::Approx(-19 * um).epsilon(0.10));

  const ModeFrequencies f = mode_frequencies(t);
  CHECK(f.fx == doctest::Approx(104).epsilon(0.05));
  CHECK(f.fy == doctest::Approx(130).epsilon(0.05));
  CHECK(f.fz == doctest::Approx(9.6).epsilon(0.05));

  const EquilibriumInfo eq = analyze_equilibrium(t);
  CHECK(eq.y_eq == y_eq);
  CHECK(eq.b_eq == doctest::Approx(0.2).epsilon(0.10));
  CHECK(eq.max_coupling < 1e-9);
  CHECK(specific_force(t, {0, y_eq, 0}).norm() < 1e-9 * constants::kGravity);
}

TEST_CASE("potential bowl has its on-axis minimum near the equilibrium") {
  const TrapModel t = reference_trap();
  Particle p;
  double best_y = 0, best_u = INFINITY;
  for (double y = -60 * um; y <= -1 * um; y += 0.01 * um) {
    const double u = potential_energy(t, p, {0, y, 0}) / p.mass;
    if (u < best_u) best_u = u, best_y = y;
  }
  CHECK(best_y == doctest::Approx(find_equilibrium(t)).epsilon(1e-3));
}

TEST_CASE("non-diamagnetic materials cannot levitate") {
  TrapModel t = reference_trap();
  t.material.chi = 0.0;
  CHECK_THROWS_AS(find_equilibrium(t), NoEquilibrium);
  t.material.chi = 1e-5;
  CHECK_THROWS_AS(find_equilibrium(t), NoEquilibrium);
  CHECK_THROWS_AS(fit_coefficients({104, 130, 9.6}, t.material, 75 * um), NoEquilibrium);
}

TEST_CASE("a field too weak to hold the particle has no equilibrium") {
  const TrapModel t{{-0.01, 0.0, 0.0, 75 * um}, kDiamond};
  CHECK_THROWS_AS(find_equilibrium(t), NoEquilibrium);
}

TEST_CASE("mode frequencies do not depend on particle size") {
  const TrapModel t = reference_trap();
  Particle p;
  const ModeFrequencies ref = mode_frequencies(t, p);
  for (double m : {1e-21, 1e-18, 56e-15, 1e-12, 1e-9}) {
    p.mass = m;
    const ModeFrequencies f = mode_frequencies(t, p);
    for (int i = 0; i < 3; ++i) CHECK(rel_err(f[i], ref[i]) <= 1e-12);
  }
}

TEST_CASE("material and particle validation") {
  Material m{-1e-5, 0.0};
  CHECK_THROWS_AS(m.validate(), InputError);
  Particle p;
  p.mass = -1;
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("coefficient fit reproduces the reference trap") {
  const CoefficientFit fit = fit_coefficients({104, 130, 9.6}, kDiamond, 75 * um);
  CHECK(fit.best.coeffs.a2 == doctest::Approx(-1.3).epsilon(0.15));
  CHECK(fit.best.coeffs.a3 == doctest::Approx(0.018).epsilon(0.15));
  CHECK(fit.best.coeffs.a4 == doctest::Approx(0.72).epsilon(0.15));
  CHECK(fit.best.y_eq == doctest::Approx(-19 * um).epsilon(0.10));
  CHECK(fit.starts_converged >= 1);

  const ModeFrequencies f = mode_frequencies({fit.best.coeffs, kDiamond});
  CHECK(f.fx == doctest::Approx(104).epsilon(1e-8));
  CHECK(f.fy == doctest::Approx(130).epsilon(1e-8));
  CHECK(f.fz == doctest::Approx(9.6).epsilon(1e-8));
  for (double r : coefficient_residuals({104, 130, 9.6}, kDiamond, fit.best.coeffs, fit.best.y_eq)) {
    CHECK(std::abs(r) < 1e-8);
  }
}

TEST_CASE("coefficient fit round trip on random traps") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  int checked = 0;
  for (int n = 0; n < 12; ++n) {
    const MultipoleCoefficients c{-1.3 * u(rng), 0.018 * u(rng), 0.72 * u(rng), 75 * um};
    ModeFrequencies f;
    try {
      f = mode_frequencies({c, kDiamond});
    } catch (const NumericalError&) {
      continue;
    }
    const CoefficientFit fit = fit_coefficients(f, kDiamond, c.y0);
    CHECK(rel_err(fit.best.coeffs.a2, c.a2) < 1e-6);
    CHECK(rel_err(fit.best.coeffs.a3, c.a3) < 1e-6);
    CHECK(rel_err(fit.best.coeffs.a4, c.a4) < 1e-6);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("degenerate frequencies approach the pure quadrupole") {
  // fx = fy and fz -> 0 is the quadrupole limit: a3 and a4 vanish.
  const TrapModel q{quadrupole_coeffs(), kDiamond};
  const double y_eq = analytic_quadrupole_y_eq(q);
  const Mat3 k = specific_stiffness(q, {0, y_eq, 0});
  const double fxy = std::sqrt(k(0, 0)) / (2 * constants::kPi);
  double previous = INFINITY;
  for (double fz : {1.0, 0.3, 0.1}) {
    const CoefficientFit fit = fit_coefficients({fxy, fxy, fz}, kDiamond, 75 * um);
    const double higher = std::abs(fit.best.coeffs.a3) + std::abs(fit.best.coeffs.a4);
    CHECK(higher < previous);
    previous = higher;
    CHECK(fit.best.coeffs.a2 == doctest::Approx(-1.3).epsilon(0.01));
  }
  CHECK(previous < 0.01);
}

TEST_CASE("coefficient fit rejects invalid frequencies") {
  CHECK_THROWS_AS(fit_coefficients({104, -130, 9.6}, kDiamond, 75 * um), InputError);
  CHECK_THROWS_AS(fit_coefficients({104, 130, 9.6}, kDiamond, 0.0), InputError);
}
