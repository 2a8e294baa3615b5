#pragma once

#include <Eigen/Dense>

#include "pathid/oam_core.hpp"

namespace pathid::jones {

using JonesMatrix = Eigen::Matrix2cd;
using JonesVector = Eigen::Vector2cd;

// Waveplate angles are measured from the vertical direction.

JonesMatrix rotation(double alpha);
JonesMatrix quarter_wave(double alpha);
JonesMatrix half_wave(double alpha);
JonesMatrix sigma_z();

/// Linear polarization at angle phi: (cos phi, sin phi).
JonesVector linear(double phi);

/// Q(pi/4) (cos phi, sin phi) = e^{i global} / sqrt(2) * (1, e^{i relative}).
struct PhaseTransfer {
  double relative_phase = 0.0;  // 2 phi - pi/2
  double global_phase = 0.0;    // pi/4 - phi
};

PhaseTransfer qwp_phase_transfer(double phi);

/// max-norm of Q(pi/4) H(a) H(b) Q(g) - Q(pi/4) H(a - b) Q(-g) sigma_z
double qhq_reduction_check(double alpha, double beta, double gamma);

enum class PlateKind { Quarter, Half };

struct WaveplateSetting {
  PlateKind kind = PlateKind::Quarter;
  double angle = 0.0;  // radians, in [0, pi)

  JonesMatrix matrix() const;
};

/// Wraps an angle into [0, pi).
double wrap_plate_angle(double angle);

struct QhqSolution {
  WaveplateSetting q_in;
  WaveplateSetting h_mid;
  WaveplateSetting q_out;
  /// q_out * h_mid * q_in * input
  JonesVector output;
  double global_phase = 0.0;  // arg of output(0)
  bool used_newton = false;

  JonesMatrix matrix() const { return q_out.matrix() * h_mid.matrix() * q_in.matrix(); }
};

/// Angles (gamma, alpha, pi/4) with Q(pi/4) H(alpha) Q(gamma) input equal to
/// (1, e^{i target}) / sqrt(2) up to a global phase. The first plate makes
/// the polarization linear, the half-wave plate sets its angle and the last
/// quarter-wave plate turns that angle into the relative phase, so for fixed
/// gamma the phase moves as 4 * alpha.
QhqSolution solve_qhq(const JonesVector& input, double target_relative_phase);

/// |<(1, e^{i omega})/sqrt(2) | v>| for normalized v.
double target_overlap(const JonesVector& v, double omega);

} // namespace pathid::jones
