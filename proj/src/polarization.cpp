#include "pathid/polarization.hpp"

#include <cmath>
#include <numbers>

namespace pathid::jones {

using std::numbers::pi;

JonesMatrix rotation(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  JonesMatrix r;
  r << c, -s, s, c;
  return r;
}

JonesMatrix sigma_z() {
  JonesMatrix z;
  z << 1.0, 0.0, 0.0, -1.0;
  return z;
}

JonesMatrix quarter_wave(double alpha) {
  JonesMatrix d;
  d << 1.0, 0.0, 0.0, Complex(0.0, 1.0);
  return rotation(alpha) * d * rotation(-alpha);
}

JonesMatrix half_wave(double alpha) { return rotation(alpha) * sigma_z() * rotation(-alpha); }

JonesVector linear(double phi) { return JonesVector(std::cos(phi), std::sin(phi)); }

PhaseTransfer qwp_phase_transfer(double phi) { return {2.0 * phi - pi / 2.0, pi / 4.0 - phi}; }

double qhq_reduction_check(double alpha, double beta, double gamma) {
  const JonesMatrix lhs = quarter_wave(pi / 4.0) * half_wave(alpha) * half_wave(beta) * quarter_wave(gamma);
  const JonesMatrix rhs = quarter_wave(pi / 4.0) * half_wave(alpha - beta) * quarter_wave(-gamma) * sigma_z();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

double wrap_plate_angle(double angle) {
  double a = std::fmod(angle, pi);
  if (a < 0.0) a += pi;
  if (a >= pi) a = 0.0;
  return a;
}

JonesMatrix WaveplateSetting::matrix() const {
  return kind == PlateKind::Quarter ? quarter_wave(angle) : half_wave(angle);
}

double target_overlap(const JonesVector& v, double omega) {
  const JonesVector t = JonesVector(1.0, std::polar(1.0, omega)) / std::sqrt(2.0);
  return std::abs(t.dot(v));
}

namespace {

JonesVector apply(const JonesVector& input, double gamma, double alpha) {
  return quarter_wave(pi / 4.0) * half_wave(alpha) * quarter_wave(gamma) * input;
}

// Re(u1 conj(u2)) of R(-gamma) v; zero exactly when Q(gamma) v is linear.
double ellipticity_residual(const JonesVector& v, double gamma) {
  const JonesVector u = rotation(-gamma) * v;
  return (u(0) * std::conj(u(1))).real();
}

Eigen::Vector2d phase_residual(const JonesVector& input, double omega, double gamma, double alpha) {
  const JonesVector out = apply(input, gamma, alpha);
  const double balance = std::norm(out(0)) - std::norm(out(1));
  const double dphi = std::remainder(std::arg(out(1) * std::conj(out(0))) - omega, 2.0 * pi);
  return {balance, dphi};
}

QhqSolution make_solution(const JonesVector& input, double gamma, double alpha, bool newton) {
  QhqSolution s;
  s.q_in = {PlateKind::Quarter, wrap_plate_angle(gamma)};
  s.h_mid = {PlateKind::Half, wrap_plate_angle(alpha)};
  s.q_out = {PlateKind::Quarter, pi / 4.0};
  s.output = s.matrix() * input;
  s.global_phase = std::arg(s.output(0));
  s.used_newton = newton;
  return s;
}

} // namespace

QhqSolution solve_qhq(const JonesVector& input, double target_relative_phase) {
  const double n = input.norm();
  if (n == 0.0) throw ArgumentError("QHQ input polarization is the zero vector");
  if (std::abs(n * n - 1.0) > kNormTolerance) throw ArgumentError("QHQ input polarization must be normalized");

  // Q(gamma) input is linear when a cos 2g + b sin 2g = 0. Circular input
  // gives a = b = 0 and any gamma works.
  const double a = ellipticity_residual(input, 0.0);
  const double b = ellipticity_residual(input, pi / 4.0);
  const double gamma = (std::abs(a) + std::abs(b) < 1e-15) ? 0.0 : 0.5 * std::atan2(-a, b);

  const JonesVector w = quarter_wave(gamma) * input;
  const int ref = std::abs(w(0)) >= std::abs(w(1)) ? 0 : 1;
  const JonesVector real_w = w * std::polar(1.0, -std::arg(w(ref)));
  const double theta = std::atan2(real_w(1).real(), real_w(0).real());

  // H(alpha) sends angle theta to 2 alpha - theta; Q(pi/4) turns angle phi
  // into relative phase 2 phi - pi/2.
  const double phi = (target_relative_phase + pi / 2.0) / 2.0;
  const double alpha = (phi + theta) / 2.0;

  QhqSolution analytic = make_solution(input, gamma, alpha, false);
  if (target_overlap(analytic.output, target_relative_phase) >= 1.0 - 1e-12) return analytic;

  // Newton on (gamma, alpha) with a central-difference Jacobian.
  Eigen::Vector2d x(gamma, alpha);
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector2d f = phase_residual(input, target_relative_phase, x(0), x(1));
    if (f.norm() < 1e-14) break;
    Eigen::Matrix2d j;
    const double h = 1e-7;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d xp = x;
      Eigen::Vector2d xm = x;
      xp(c) += h;
      xm(c) -= h;
      j.col(c) = (phase_residual(input, target_relative_phase, xp(0), xp(1)) -
                  phase_residual(input, target_relative_phase, xm(0), xm(1))) /
                 (2.0 * h);
    }
    x -= j.completeOrthogonalDecomposition().solve(f);
  }
  return make_solution(input, x(0), x(1), true);
}

} // namespace pathid::jones
