#include <doctest.h>

#include <random>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"
#include "mgtrap/field_model.hpp"
#include "support.hpp"

using namespace mgtrap;
using testsupport::quadrupole_coeffs;
using testsupport::reference_coeffs;

namespace {
const double kC2 = 0.5 * std::sqrt(15.0 / constants::kPi);
constexpr double um = 1e-6;
}  // namespace

TEST_CASE("real harmonics at special points") {
  CHECK(real_harmonic(Harmonic::Y2m2, {0.3, 0.0, -0.7}) == doctest::Approx(0.0));
  CHECK(real_harmonic(Harmonic::Y2m2, {1.0, 1.0, 0.0}) == doctest::Approx(0.5463).epsilon(1e-4));
  CHECK(real_harmonic(Harmonic::Y31, {0.0, 0.4, 0.2}) == doctest::Approx(0.0));
  CHECK(real_harmonic(Harmonic::Y4m4, {0.0, 0.0, 0.0}) == 0.0);
  CHECK(degree(Harmonic::Y2m2) == 2);
  CHECK(degree(Harmonic::Y31) == 3);
  CHECK(degree(Harmonic::Y4m4) == 4);
}

TEST_CASE("harmonics are unit-normalised on the sphere") {
  // Monte Carlo average of Y^2 over the sphere is 1/(4 pi).
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (Harmonic h : {Harmonic::Y2m2, Harmonic::Y31, Harmonic::Y4m4}) {
    double s = 0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
      const double y = real_harmonic(h, {n(rng), n(rng), n(rng)});
      s += y * y;
    }
    CHECK(s / N * 4 * constants::kPi == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("solid harmonic is r^l times the angular function") {
  const Vec3 p{0.3, -0.2, 0.5};
  for (Harmonic h : {Harmonic::Y2m2, Harmonic::Y31, Harmonic::Y4m4}) {
    CHECK(solid_harmonic(h, p) == doctest::Approx(std::pow(p.norm(), degree(h)) * real_harmonic(h, p)));
  }
}

TEST_CASE("scalar potential") {
  CHECK(scalar_potential(reference_coeffs(), {0, 0, 0}) == 0.0);

  MultipoleCoefficients c{1.0, 0.0, 0.0, 75e-6};
  const Vec3 p{1 * um, 1 * um, 0};
  const double r = p.norm();
  const double expected = c.a2 * c.y0 / (2 * constants::kMu0) * std::pow(r / c.y0, 2) * real_harmonic(Harmonic::Y2m2, p);
  CHECK(scalar_potential(c, p) == doctest::Approx(expected).epsilon(1e-12));

  MultipoleCoefficients odd{0.0, 0.3, 0.0, 75e-6};
  const Vec3 q{3 * um, -2 * um, 5 * um};
  CHECK(scalar_potential(odd, {-q.x, q.y, q.z}) == doctest::Approx(-scalar_potential(odd, q)));
}

TEST_CASE("field of a pure quadrupole") {
  const auto c = quadrupole_coeffs();
  const Vec3 on_axis = field_B(c, {0, 0, 17 * um});
  CHECK(on_axis.norm() == doctest::Approx(0.0));

  const double K = c.a2 * kC2 / (2 * c.y0);
  CHECK(quadrupole_gradient(c) == doctest::Approx(K));
  const Vec3 p{4 * um, -9 * um, 0};
  CHECK(field_B(c, p).norm() == doctest::Approx(std::abs(K) * std::hypot(p.x, p.y)).epsilon(1e-12));
}

TEST_CASE("field magnitude at the reference equilibrium is about 0.2 T") {
  CHECK(field_B(reference_coeffs(), {0, -19 * um, 0}).norm() == doctest::Approx(0.2).epsilon(0.10));
}

TEST_CASE("|B|^2 derivatives") {
  const auto q = quadrupole_coeffs();
  const Vec3 g0 = grad_b_squared(q, {0, 0, 0});
  CHECK(g0.norm() == doctest::Approx(0.0));

  const double K = quadrupole_gradient(q);
  const Mat3 h = hess_b_squared(q, {1 * um, 2 * um, 3 * um});
  CHECK(h(0, 0) == doctest::Approx(2 * K * K));
  CHECK(h(1, 1) == doctest::Approx(2 * K * K));
  CHECK(h(2, 2) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(h(0, 1)) < 1e-9 * K * K);
}

TEST_CASE("gradient matches 1 nm central differences") {
  const auto c = reference_coeffs();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30 * um, 30 * um);
  const double h = 1e-9;
  for (int n = 0; n < 200; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    const Vec3 g = grad_b_squared(c, p);
    Vec3 fd;
    for (int k = 0; k < 3; ++k) {
      Vec3 d;
      d[k] = h;
      fd[k] = (b_squared(c, p + d) - b_squared(c, p - d)) / (2 * h);
    }
    CHECK((g - fd).norm() <= 1e-6 * g.norm());
  }
}

TEST_CASE("field properties over 1000 random points") {
  const auto c = reference_coeffs();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.5 * c.y0, 0.5 * c.y0);
  const double h = 1e-6 * c.y0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    Mat3 jac, fd_hess;
    for (int k = 0; k < 3; ++k) {
      Vec3 d;
      d[k] = h;
      const Vec3 bp = field_B(c, p + d), bm = field_B(c, p - d);
      const Vec3 gp = grad_b_squared(c, p + d), gm = grad_b_squared(c, p - d);
      for (int i = 0; i < 3; ++i) {
        jac(i, k) = (bp[i] - bm[i]) / (2 * h);
        fd_hess(i, k) = (gp[i] - gm[i]) / (2 * h);
      }
    }
    const double jn = jac.norm();
    REQUIRE(std::abs(jac.trace()) <= 1e-6 * jn);          // div B = 0, Laplace
    REQUIRE((jac - jac.transpose()).norm() <= 1e-6 * jn);  // curl B = 0
    const Mat3 ha = hess_b_squared(c, p);
    REQUIRE((ha - fd_hess).norm() <= 1e-6 * ha.norm());
    REQUIRE(ha.isApprox(ha.transpose(), 1e-12));
  }
}

TEST_CASE("each harmonic alone solves Laplace's equation") {
  // The polynomial part is harmonic: its Laplacian from a 5-point stencil
  // vanishes relative to the natural curvature scale |f| / r^2.
  const Vec3 p{7 * um, -11 * um, 5 * um};
  const double h = 1 * um;
  for (Harmonic hm : {Harmonic::Y2m2, Harmonic::Y31, Harmonic::Y4m4}) {
    double lap = 0, scale = std::abs(solid_harmonic(hm, p)) / p.dot(p);
    for (int k = 0; k < 3; ++k) {
      Vec3 d;
      d[k] = h;
      Vec3 d2;
      d2[k] = 2 * h;
      // Fourth-order stencil, exact for polynomials up to degree 5.
      const double second = (-solid_harmonic(hm, p + d2) + 16 * solid_harmonic(hm, p + d) - 30 * solid_harmonic(hm, p) +
                             16 * solid_harmonic(hm, p - d) - solid_harmonic(hm, p - d2)) /
                            (12 * h * h);
      lap += second;
      scale += std::abs(second);
    }
    CHECK(std::abs(lap) <= 1e-6 * scale);
  }
}

TEST_CASE("coefficient validation") {
  MultipoleCoefficients c = reference_coeffs();
  CHECK_NOTHROW(c.validate());
  c.y0 = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = reference_coeffs();
  c.a3 = NAN;
  CHECK_THROWS_AS(c.validate(), InputError);
}
