#include <doctest.h>

#include <cmath>
#include <random>

#include "mgtrap/errors.hpp"
#include "mgtrap/tracking.hpp"

using namespace mgtrap;

namespace {

CameraModel quiet_camera() {
  CameraModel c;
  c.background_mean = 0;
  c.background_std = 0;
  return c;
}

}  // namespace

TEST_CASE("noiseless spot peaks at its pixel") {
  const CameraModel cam = quiet_camera();
  const double y = (cam.center_row - 30) * cam.calibration;  // row 30
  const double z = (100 - cam.center_col) * cam.calibration;  // col 100
  const Frame f = render_frame(cam, {y, z}, 1);
  int best = 0;
  for (int i = 1; i < f.width * f.height; ++i)
    if (f.intensity[i] > f.intensity[best]) best = i;
  CHECK(best / f.width == 30);
  CHECK(best % f.width == 100);
  CHECK(f.at(30, 99) == doctest::Approx(f.at(30, 101)));
  CHECK(f.at(29, 100) == doctest::Approx(f.at(31, 100)));
}

TEST_CASE("spot integrates to the Gaussian volume plus background") {
  CameraModel cam;
  cam.background_std = 0;
  const Frame f = render_frame(cam, {0, 0}, 1);
  double sum = 0;
  for (float v : f.intensity) sum += v;
  const double expected = 2 * M_PI * cam.psf_sigma * cam.psf_sigma * cam.peak_counts +
                          cam.background_mean * cam.width * cam.height;
  CHECK(sum == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("calibration maps one pixel to calibration micrometres") {
  const CameraModel cam = quiet_camera();
  CHECK(to_col(cam, cam.calibration) - to_col(cam, 0) == doctest::Approx(1.0));
  CHECK(to_row(cam, cam.calibration) - to_row(cam, 0) == doctest::Approx(-1.0));
  const auto a = locate(render_frame(cam, {0.1, 0.2}, 1), cam, 100);
  const auto b = locate(render_frame(cam, {0.1, 0.2 + cam.calibration}, 1), cam, 100);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(b->col - a->col == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("noiseless localisation is sub-pixel accurate and translation equivariant") {
  const CameraModel cam = quiet_camera();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  const auto ref = locate(render_frame(cam, {0, 0}, 1), cam, 100);
  REQUIRE(ref);
  for (int i = 0; i < 50; ++i) {
    const PlanePosition p{u(rng), 4 * u(rng)};
    const auto loc = locate(render_frame(cam, p, 1), cam, 100);
    REQUIRE(loc);
    CHECK(std::abs(loc->row - to_row(cam, p.y)) < 0.05);
    CHECK(std::abs(loc->col - to_col(cam, p.z)) < 0.05);
    CHECK(std::abs((loc->col - ref->col) - (to_col(cam, p.z) - to_col(cam, 0))) < 0.05);
  }
}

TEST_CASE("background-only frame is not located") {
  const CameraModel cam;
  CHECK_FALSE(locate(render_frame(cam, {0, 0}, 3, 0.0), cam, 400).has_value());
}

TEST_CASE("localisation error at SNR 10 over 1000 frames") {
  const CameraModel cam;  // peak 100 counts over background std 10
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  double sq = 0;
  int n = 0;
  for (int i = 0; i < 1000; ++i) {
    const PlanePosition p{u(rng), u(rng)};
    const auto loc = locate(render_frame(cam, p, 1000 + i), cam, 400);
    REQUIRE(loc);
    sq += std::pow(loc->row - to_row(cam, p.y), 2) + std::pow(loc->col - to_col(cam, p.z), 2);
    ++n;
  }
  CHECK(std::sqrt(sq / n) < 0.2);
}

TEST_CASE("rendering is deterministic per seed and checks the field") {
  const CameraModel cam;
  CHECK(render_frame(cam, {1, 2}, 9).intensity == render_frame(cam, {1, 2}, 9).intensity);
  CHECK(render_frame(cam, {1, 2}, 9).intensity != render_frame(cam, {1, 2}, 10).intensity);
  CHECK_THROWS_AS(render_frame(cam, {100, 0}, 1), OutOfField);
}

TEST_CASE("fill_missing replaces gaps by the mean of found positions") {
  TrackedTrajectory t;
  t.positions = {{{0, 0}, true}, {{}, false}, {{2, 2}, true}};
  const TrackedTrajectory f = fill_missing(t);
  CHECK(f.fill_policy_applied);
  CHECK(f.missing() == 1);
  CHECK(f.positions[1].pos.y == doctest::Approx(1));
  CHECK(f.positions[1].pos.z == doctest::Approx(1));
  CHECK_FALSE(f.positions[1].found);
  CHECK(f.positions[0].pos.y == 0);
  CHECK(f.positions[2].pos.z == 2);
}

TEST_CASE("fill_missing without gaps is the identity") {
  TrackedTrajectory t;
  t.positions = {{{0.5, -1}, true}, {{0.25, 3}, true}};
  const TrackedTrajectory f = fill_missing(t);
  for (std::size_t i = 0; i < t.positions.size(); ++i) {
    CHECK(f.positions[i].pos.y == t.positions[i].pos.y);
    CHECK(f.positions[i].pos.z == t.positions[i].pos.z);
  }
  CHECK(f.missing() == 0);
}

TEST_CASE("fill_missing needs at least one found frame") {
  TrackedTrajectory t;
  t.positions.resize(4);
  CHECK_THROWS_AS(fill_missing(t), AllMissing);
}

TEST_CASE("frame validation") {
  Frame f;
  f.width = 8;
  f.height = 8;
  f.intensity.assign(64, 0.f);
  CHECK_THROWS_AS(f.validate(), InputError);
  f.width = f.height = 16;
  f.intensity.assign(256, 0.f);
  f.intensity[3] = -1.f;
  CHECK_THROWS_AS(f.validate(), NonFiniteError);
}
