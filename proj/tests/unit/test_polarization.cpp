#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pathid/polarization.hpp"

using namespace pathid;
using namespace pathid::jones;
using std::numbers::pi;

namespace {

double max_abs(const JonesMatrix& m) { return m.cwiseAbs().maxCoeff(); }
double vdiff(const JonesVector& a, const JonesVector& b) { return (a - b).cwiseAbs().maxCoeff(); }
double unitarity(const JonesMatrix& m) { return max_abs(m.adjoint() * m - JonesMatrix::Identity()); }

JonesMatrix mat(Complex a, Complex b, Complex c, Complex d) {
  JonesMatrix m;
  m << a, b, c, d;
  return m;
}

JonesVector random_input(std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  JonesVector v(Complex(n(gen), n(gen)), Complex(n(gen), n(gen)));
  return v / v.norm();
}

}  // namespace

TEST_CASE("rotation") {
  CHECK(max_abs(rotation(0.0) - JonesMatrix::Identity()) == 0.0);
  CHECK(max_abs(rotation(pi / 2) - mat(0, -1, 1, 0)) < 1e-16);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const double a = u(gen), b = u(gen);
    CHECK(max_abs(rotation(a) * rotation(b) - rotation(a + b)) < 1e-12);
    CHECK(std::abs(rotation(a).determinant() - 1.0) < 1e-14);
  }
}

TEST_CASE("waveplates") {
  CHECK(max_abs(quarter_wave(0.0) - mat(1, 0, 0, Complex(0, 1))) == 0.0);
  CHECK(max_abs(half_wave(0.0) - sigma_z()) == 0.0);
  CHECK(max_abs(half_wave(pi / 4) - mat(0, 1, 1, 0)) < 1e-15);

  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(gen), b = u(gen), c = u(gen);
    CHECK(unitarity(quarter_wave(a)) < 1e-12);
    CHECK(unitarity(half_wave(a)) < 1e-12);
    CHECK(max_abs(half_wave(a) * half_wave(a) - JonesMatrix::Identity()) < 1e-12);
    const JonesMatrix stack = quarter_wave(a) * half_wave(b) * quarter_wave(c) * rotation(a - c);
    CHECK(unitarity(stack) < 1e-12);
  }
}

TEST_CASE("quarter-wave phase transfer") {
  CHECK(std::abs(qwp_phase_transfer(pi / 4).relative_phase) < 1e-15);
  const JonesVector h = quarter_wave(pi / 4) * linear(0.0);
  // (1, -i)/sqrt2 up to global phase
  const JonesVector want = JonesVector(1.0, Complex(0, -1)) / std::sqrt(2.0);
  CHECK(std::abs(std::abs(want.dot(h)) - 1.0) < 1e-15);
  CHECK(std::abs(qwp_phase_transfer(0.0).relative_phase + pi / 2) < 1e-15);

  for (int k = 0; k < 100; ++k) {
    const double phi = -pi + 2 * pi * k / 100.0;
    const auto t = qwp_phase_transfer(phi);
    const JonesVector out = quarter_wave(pi / 4) * linear(phi);
    const JonesVector formula =
        std::polar(1.0, t.global_phase) / std::sqrt(2.0) * JonesVector(1.0, std::polar(1.0, t.relative_phase));
    CHECK(vdiff(out, formula) < 1e-12);
    const double shifted = qwp_phase_transfer(phi + pi).relative_phase;
    CHECK(std::abs(std::remainder(shifted - t.relative_phase, 2 * pi)) < 1e-12);
  }
}

TEST_CASE("QHQ reduction identities") {
  CHECK(qhq_reduction_check(0, 0, 0) <= 1e-12);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2 * pi, 2 * pi);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(gen), b = u(gen), g = u(gen);
    CHECK(qhq_reduction_check(a, b, g) <= 1e-12);
    CHECK(max_abs(half_wave(a) * half_wave(b) - half_wave(a - b) * sigma_z()) <= 1e-12);
    CHECK(max_abs(sigma_z() * quarter_wave(-g) - quarter_wave(g) * sigma_z()) <= 1e-12);
  }
}

TEST_CASE("plate angle wrapping") {
  CHECK(wrap_plate_angle(0.0) == 0.0);
  CHECK(wrap_plate_angle(pi) == 0.0);
  CHECK(wrap_plate_angle(-0.25) == doctest::Approx(pi - 0.25));
  CHECK(wrap_plate_angle(7.0) == doctest::Approx(7.0 - 2 * pi));
  CHECK(wrap_plate_angle(std::nextafter(pi, 0.0)) < pi);
}

TEST_CASE("solve_qhq examples") {
  SUBCASE("horizontal input, zero phase") {
    const auto s = solve_qhq(JonesVector(1, 0), 0.0);
    const JonesVector want = JonesVector(1, 1) / std::sqrt(2.0);
    CHECK(std::abs(std::abs(want.dot(s.output)) - 1.0) < 1e-9);
    CHECK(s.q_out.angle == doctest::Approx(pi / 4));
    CHECK(s.q_in.kind == PlateKind::Quarter);
    CHECK(s.h_mid.kind == PlateKind::Half);
  }
  SUBCASE("diagonal input, phase pi") {
    const auto s = solve_qhq(JonesVector(1, 1) / std::sqrt(2.0), pi);
    const JonesVector want = JonesVector(1, -1) / std::sqrt(2.0);
    CHECK(std::abs(std::abs(want.dot(s.output)) - 1.0) < 1e-9);
  }
  SUBCASE("circular input") {
    const auto s = solve_qhq(JonesVector(1, Complex(0, 1)) / std::sqrt(2.0), 1.0);
    CHECK(std::abs(target_overlap(s.output, 1.0) - 1.0) < 1e-9);
  }
  SUBCASE("global phase is reported") {
    const auto s = solve_qhq(JonesVector(1, 0), 0.7);
    CHECK(std::abs(std::arg(s.output(0)) - s.global_phase) < 1e-15);
    const JonesVector stripped = s.output * std::polar(1.0, -s.global_phase);
    CHECK(vdiff(stripped, JonesVector(1.0, std::polar(1.0, 0.7)) / std::sqrt(2.0)) < 1e-9);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(solve_qhq(JonesVector(0, 0), 0.0), ArgumentError);
    CHECK_THROWS_AS(solve_qhq(JonesVector(1, 1), 0.0), ArgumentError);
  }
}

TEST_CASE("solve_qhq forward-verifies for random inputs and targets") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int i = 0; i < 100; ++i) {
    const JonesVector in = random_input(gen);
    const double omega = u(gen);
    const auto s = solve_qhq(in, omega);
    const JonesVector out = quarter_wave(s.q_out.angle) * half_wave(s.h_mid.angle) * quarter_wave(s.q_in.angle) * in;
    CHECK(vdiff(out, s.output) < 1e-12);
    CHECK(std::abs(target_overlap(out, omega) - 1.0) < 1e-9);
    CHECK(std::abs(std::abs(out(0)) - 1.0 / std::sqrt(2.0)) < 1e-9);
    CHECK(std::abs(std::abs(out(1)) - 1.0 / std::sqrt(2.0)) < 1e-9);
    for (const auto* p : {&s.q_in, &s.h_mid, &s.q_out}) {
      CHECK(p->angle >= 0.0);
      CHECK(p->angle < pi);
    }
  }
}

TEST_CASE("half-wave angle sweeps the phase linearly") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 20; ++i) {
    const JonesVector in = random_input(gen);
    const auto s = solve_qhq(in, 0.3);
    const double h = 1e-3;
    double prev = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double alpha = s.h_mid.angle + k * h;
      const JonesVector out = quarter_wave(pi / 4) * half_wave(alpha) * quarter_wave(s.q_in.angle) * in;
      const double omega = std::arg(out(1) * std::conj(out(0)));
      if (k > 0) CHECK(std::abs(std::remainder(omega - prev, 2 * pi) - 4.0 * h) < 1e-9);
      prev = omega;
    }
  }
}
