#include "mgtrap/field_model.hpp"

#include <array>
#include <cmath>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"

namespace mgtrap {
namespace {

using constants::kMu0;
using constants::kPi;

// Normalisation constants of the real harmonics in their Cartesian form.
const double kC2 = 0.5 * std::sqrt(15.0 / kPi);
const double kC3 = 0.25 * std::sqrt(21.0 / (2.0 * kPi));
const double kC4 = 0.75 * std::sqrt(35.0 / kPi);

// mu0 * Phi = P(x, y, z) with
//   P = k2 xy + k3 (4xz^2 - x^3 - xy^2) + k4 (x^3 y - x y^3)
// so B = -grad P. All derivatives below are exact polynomial forms.
struct Poly {
  double k2, k3, k4;

  explicit Poly(const MultipoleCoefficients& c)
      : k2(c.a2 * kC2 / (2.0 * c.y0)),
        k3(c.a3 * kC3 / (3.0 * c.y0 * c.y0)),
        k4(c.a4 * kC4 / (4.0 * c.y0 * c.y0 * c.y0)) {}

  double value(const Vec3& p) const {
    const double x = p.x, y = p.y, z = p.z;
    return k2 * x * y + k3 * (4.0 * x * z * z - x * x * x - x * y * y) +
           k4 * (x * x * x * y - x * y * y * y);
  }

  Vec3 grad(const Vec3& p) const {
    const double x = p.x, y = p.y, z = p.z;
    return {k2 * y + k3 * (4.0 * z * z - 3.0 * x * x - y * y) + k4 * (3.0 * x * x * y - y * y * y),
            k2 * x - 2.0 * k3 * x * y + k4 * (x * x * x - 3.0 * x * y * y),
            8.0 * k3 * x * z};
  }

  Mat3 hess(const Vec3& p) const {
    const double x = p.x, y = p.y, z = p.z;
    Mat3 h;
    h(0, 0) = -6.0 * k3 * x + 6.0 * k4 * x * y;
    h(0, 1) = k2 - 2.0 * k3 * y + 3.0 * k4 * (x * x - y * y);
    h(0, 2) = 8.0 * k3 * z;
    h(1, 1) = -2.0 * k3 * x - 6.0 * k4 * x * y;
    h(1, 2) = 0.0;
    h(2, 2) = 8.0 * k3 * x;
    h(1, 0) = h(0, 1);
    h(2, 0) = h(0, 2);
    h(2, 1) = h(1, 2);
    return h;
  }

  // Third derivatives T[k](i, j) = d^3 P / dk di dj.
  std::array<Mat3, 3> third(const Vec3& p) const {
    const double x = p.x, y = p.y;
    const double txxx = -6.0 * k3 + 6.0 * k4 * y;
    const double txxy = 6.0 * k4 * x;
    const double txyy = -2.0 * k3 - 6.0 * k4 * y;
    const double txzz = 8.0 * k3;
    const double tyyy = -6.0 * k4 * x;
    std::array<Mat3, 3> t;
    t[0] << txxx, txxy, 0.0,
            txxy, txyy, 0.0,
            0.0,  0.0,  txzz;
    t[1] << txxy, txyy, 0.0,
            txyy, tyyy, 0.0,
            0.0,  0.0,  0.0;
    t[2] << 0.0,  0.0,  txzz,
            0.0,  0.0,  0.0,
            txzz, 0.0,  0.0;
    return t;
  }
};

}  // namespace

void MultipoleCoefficients::validate() const {
  if (!(std::isfinite(a2) && std::isfinite(a3) && std::isfinite(a4) && std::isfinite(y0))) {
    throw InputError("multipole coefficients must be finite");
  }
  if (!(y0 > 0.0)) throw InputError("y0 must be positive");
}

int degree(Harmonic h) {
  switch (h) {
    case Harmonic::Y2m2: return 2;
    case Harmonic::Y31: return 3;
    case Harmonic::Y4m4: return 4;
  }
  return 0;
}

double solid_harmonic(Harmonic h, const Vec3& p) {
  const double x = p.x, y = p.y, z = p.z;
  switch (h) {
    case Harmonic::Y2m2: return kC2 * x * y;
    case Harmonic::Y31: return kC3 * x * (4.0 * z * z - x * x - y * y);
    case Harmonic::Y4m4: return kC4 * x * y * (x * x - y * y);
  }
  return 0.0;
}

double real_harmonic(Harmonic h, const Vec3& p) {
  const double r = p.norm();
  if (r == 0.0) return 0.0;
  return solid_harmonic(h, p) / std::pow(r, degree(h));
}

double scalar_potential(const MultipoleCoefficients& c, const Vec3& pos) {
  return Poly(c).value(pos) / kMu0;
}

Vec3 field_B(const MultipoleCoefficients& c, const Vec3& pos) { return -Poly(c).grad(pos); }

double b_squared(const MultipoleCoefficients& c, const Vec3& pos) {
  const Vec3 g = Poly(c).grad(pos);
  return g.dot(g);
}

Vec3 grad_b_squared(const MultipoleCoefficients& c, const Vec3& pos) {
  const Poly poly(c);
  const Vec3 g = poly.grad(pos);
  const Eigen::Vector3d out = 2.0 * poly.hess(pos) * Eigen::Vector3d(g.x, g.y, g.z);
  return {out(0), out(1), out(2)};
}

Mat3 hess_b_squared(const MultipoleCoefficients& c, const Vec3& pos) {
  const Poly poly(c);
  const Vec3 g = poly.grad(pos);
  const Mat3 h = poly.hess(pos);
  const auto t = poly.third(pos);
  Mat3 out = h * h;
  for (int k = 0; k < 3; ++k) out += g[k] * t[k];
  return 2.0 * out;
}

double quadrupole_gradient(const MultipoleCoefficients& c) { return c.a2 * kC2 / (2.0 * c.y0); }

}  // namespace mgtrap
