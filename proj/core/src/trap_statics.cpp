#include "mgtrap/trap_statics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/least_squares.hpp"

namespace mgtrap {
namespace {

using constants::kGravity;
using constants::kMu0;
using constants::kPi;

// chi / (2 rho mu0): converts gradients of |B|^2 into force per unit mass.
double magnetic_factor(const Material& m) { return m.chi / (2.0 * m.rho * kMu0); }

constexpr int kScanPoints = 600;

}  // namespace

void Material::validate() const {
  if (!std::isfinite(chi)) throw InputError("susceptibility must be finite");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InputError("density must be positive");
}

void Particle::validate() const {
  material.validate();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InputError("particle mass must be positive");
}

double potential_energy(const TrapModel& t, const Particle& particle, const Vec3& pos) {
  const double v = particle.volume();
  return -t.material.chi * b_squared(t.coeffs, pos) * v / (2.0 * kMu0) + particle.mass * kGravity * pos.y;
}

Vec3 specific_force(const TrapModel& t, const Vec3& pos) {
  Vec3 f = grad_b_squared(t.coeffs, pos) * magnetic_factor(t.material);
  f.y -= kGravity;
  return f;
}

Mat3 specific_stiffness(const TrapModel& t, const Vec3& pos) {
  return -magnetic_factor(t.material) * hess_b_squared(t.coeffs, pos);
}

double levitation_residual(const TrapModel& t, double y) {
  return kGravity - magnetic_factor(t.material) * grad_b_squared(t.coeffs, {0.0, y, 0.0}).y;
}

double find_equilibrium(const TrapModel& t) {
  t.coeffs.validate();
  t.material.validate();
  if (!(t.material.chi < 0.0)) {
    throw NoEquilibrium("levitation requires a diamagnetic material (chi < 0)");
  }
  const double lo = -0.9 * t.coeffs.y0;
  const double hi = -1e-9;
  auto res = [&](double y) { return levitation_residual(t, y); };

  // The residual is d(U/m)/dy; a restoring root has it rising through zero.
  std::optional<double> best;
  double prev_y = lo;
  double prev_r = res(lo);
  for (int i = 1; i <= kScanPoints; ++i) {
    const double y = lo + (hi - lo) * i / kScanPoints;
    const double r = res(y);
    if (prev_r < 0.0 && r >= 0.0) {
      double a = prev_y, b = y;
      for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        if (res(mid) < 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      const double root = std::abs(res(a)) < std::abs(res(b)) ? a : b;
      if (!best || std::abs(root) < std::abs(*best)) best = root;
    }
    prev_y = y;
    prev_r = r;
  }
  if (!best) {
    throw NoEquilibrium("no stable levitation point in the search interval (-0.9 y0, 0)");
  }

  const Vec3 eq{0.0, *best, 0.0};
  const Vec3 f = specific_force(t, eq);
  if (f.norm() > 1e-6 * kGravity) {
    throw NoEquilibrium("net force does not vanish at the vertical equilibrium");
  }
  const Mat3 k = specific_stiffness(t, eq);
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(k, Eigen::EigenvaluesOnly);
  const double scale = k.diagonal().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw Unstable("potential energy Hessian at equilibrium is not positive definite");
  }
  return *best;
}

EquilibriumInfo analyze_equilibrium(const TrapModel& t) {
  EquilibriumInfo info;
  info.y_eq = find_equilibrium(t);
  const Vec3 eq{0.0, info.y_eq, 0.0};
  info.stiffness = specific_stiffness(t, eq);
  info.b_eq = field_B(t.coeffs, eq).norm();

  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) {
    const double k = info.stiffness(i, i);
    if (!(k > 0.0)) {
      throw ImaginaryFrequency(std::string("non-positive curvature along ") +
                               axis_name(static_cast<Axis>(i)));
    }
    f[i] = std::sqrt(k) / (2.0 * kPi);
  }
  info.freqs = {f[0], f[1], f[2]};
  const double min_diag = info.stiffness.diagonal().minCoeff();
  double off = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) off = std::max(off, std::abs(info.stiffness(i, j)));
  info.max_coupling = off / min_diag;
  return info;
}

ModeFrequencies mode_frequencies(const TrapModel& t) { return analyze_equilibrium(t).freqs; }

ModeFrequencies mode_frequencies(const TrapModel& t, const Particle& particle) {
  particle.validate();
  return mode_frequencies(TrapModel{t.coeffs, particle.material});
}

std::vector<double> coefficient_residuals(const ModeFrequencies& measured, const Material& material,
                                          const MultipoleCoefficients& coeffs, double y_eq) {
  const TrapModel t{coeffs, material};
  const Mat3 k = specific_stiffness(t, {0.0, y_eq, 0.0});
  std::vector<double> r(4);
  r[0] = levitation_residual(t, y_eq) / kGravity;
  for (int i = 0; i < 3; ++i) {
    const double w2 = std::pow(2.0 * kPi * measured[i], 2);
    r[i + 1] = (k(i, i) - w2) / w2;
  }
  return r;
}

CoefficientFit fit_coefficients(const ModeFrequencies& measured, const Material& material, double y0,
                                const CoefficientFitOptions& options) {
  material.validate();
  if (!(measured.fx > 0.0 && measured.fy > 0.0 && measured.fz > 0.0)) {
    throw InputError("measured frequencies must all be positive");
  }
  if (!(y0 > 0.0)) throw InputError("y0 must be positive");
  if (!(material.chi < 0.0)) {
    throw NoEquilibrium("levitation requires a diamagnetic material (chi < 0)");
  }

  LeastSquaresProblem problem;
  problem.n_residuals = 4;
  // Parameters: a2, a3, a4 in tesla and y_eq / y0.
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const MultipoleCoefficients c{p(0), p(1), p(2), y0};
    const auto v = coefficient_residuals(measured, material, c, p(3) * y0);
    for (int i = 0; i < 4; ++i) r(i) = v[i];
  };

  // Pure-quadrupole estimate from the vertical frequency.
  const double c2 = 0.5 * std::sqrt(15.0 / kPi);
  const double k2 = 2.0 * kPi * measured.fy / std::sqrt(-material.chi / (material.rho * kMu0));
  const double a2 = -k2 * 2.0 * y0 / c2;
  const double y_start = material.rho * kGravity * kMu0 / (material.chi * k2 * k2);

  LeastSquaresOptions lm;
  lm.max_iterations = options.max_iterations;
  lm.residual_tolerance = options.tolerance;
  lm.fd_step = 1e-7;

  std::vector<CoefficientSolution> solutions;
  double best_residual = std::numeric_limits<double>::infinity();
  int converged = 0;
  for (double scale : {1.0, 3.0}) {
    for (double s3 : {1.0, -1.0}) {
      for (double s4 : {1.0, -1.0}) {
        Eigen::VectorXd start(4);
        start << a2, s3 * 0.01 * scale * std::abs(a2), s4 * 0.5 * scale * std::abs(a2),
            std::clamp(y_start / y0, -0.8, -1e-3);
        const auto fit = levenberg_marquardt(problem, start, lm);
        best_residual = std::min(best_residual, fit.residual_norm);
        if (!fit.converged || !fit.params.allFinite()) continue;

        Eigen::VectorXd p = fit.params;
        if (p(0) > 0.0) p.head<3>() *= -1.0;  // |B|^2 is even in the overall sign
        CoefficientSolution sol{{p(0), p(1), p(2), y0}, p(3) * y0, fit.residual_norm};
        if (!(sol.y_eq < 0.0 && sol.y_eq > -0.9 * y0)) continue;
        try {
          const double y_check = find_equilibrium(TrapModel{sol.coeffs, material});
          if (std::abs(y_check - sol.y_eq) > 1e-6 * y0) continue;
        } catch (const NumericalError&) {
          continue;
        }
        ++converged;
        const auto same = [&](const CoefficientSolution& o) {
          const double scale_a = std::abs(sol.coeffs.a2);
          return std::abs(o.coeffs.a2 - sol.coeffs.a2) <= 1e-5 * scale_a &&
                 std::abs(o.coeffs.a3 - sol.coeffs.a3) <= 1e-5 * scale_a &&
                 std::abs(o.coeffs.a4 - sol.coeffs.a4) <= 1e-5 * scale_a &&
                 std::abs(o.y_eq - sol.y_eq) <= 1e-5 * y0;
        };
        if (std::none_of(solutions.begin(), solutions.end(), same)) solutions.push_back(sol);
      }
    }
  }
  if (solutions.empty()) {
    throw NoConvergence("coefficient fit did not converge from any start", best_residual);
  }
  std::sort(solutions.begin(), solutions.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.y_eq) != std::abs(b.y_eq)) return std::abs(a.y_eq) < std::abs(b.y_eq);
    return a.coeffs.a2 < b.coeffs.a2;
  });
  CoefficientFit out;
  out.best = solutions.front();
  out.alternatives.assign(solutions.begin() + 1, solutions.end());
  out.starts_converged = converged;
  return out;
}

}  // namespace mgtrap
