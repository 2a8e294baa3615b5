#pragma once

#include <compare>
#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "pathid/errors.hpp"

namespace pathid {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kDefaultTruncation = 4;
inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kOperatorTolerance = 1e-10;

/// Signal/idler OAM quanta of one two-photon basis state |l_s, l_i>.
struct OamPair {
  int signal = 0;
  int idler = 0;

  auto operator<=>(const OamPair&) const = default;
};

/// Truncated OAM basis {-L..L} per photon and its (2L+1)^2 product space.
/// Flat index of |l_s, l_i> is (l_s + L) * (2L+1) + (l_i + L).
class ModeSpace {
public:
  explicit ModeSpace(int truncation = kDefaultTruncation);

  int truncation() const { return truncation_; }
  int photon_dim() const { return 2 * truncation_ + 1; }
  int joint_dim() const { return photon_dim() * photon_dim(); }

  bool contains(int ell) const { return ell >= -truncation_ && ell <= truncation_; }
  bool contains(OamPair p) const { return contains(p.signal) && contains(p.idler); }

  int photon_index(int ell) const;
  int ell_at(int photon_index) const;
  int joint_index(OamPair p) const;
  OamPair pair_at(int joint_index) const;

  bool operator==(const ModeSpace&) const = default;

private:
  int truncation_;
};

/// Single-photon OAM ket, sparse over l. Used for projective settings.
class ModeKet {
public:
  ModeKet() = default;
  explicit ModeKet(std::map<int, Complex> amplitudes);

  static ModeKet basis(int ell);
  /// (|a> + e^{i theta}|b>)/sqrt(2)
  static ModeKet superposition(int a, int b, double theta);

  const std::map<int, Complex>& amplitudes() const { return amplitudes_; }
  Complex amplitude(int ell) const;
  double norm() const;

  bool operator==(const ModeKet&) const = default;

private:
  std::map<int, Complex> amplitudes_;
};

/// Sparse two-photon amplitude map over (l_s, l_i) pairs.
class BiphotonKet {
public:
  explicit BiphotonKet(ModeSpace space = ModeSpace{});
  BiphotonKet(ModeSpace space, std::map<OamPair, Complex> amplitudes);

  const ModeSpace& space() const { return space_; }
  const std::map<OamPair, Complex>& amplitudes() const { return amplitudes_; }

  Complex amplitude(OamPair p) const;
  /// Adds to the amplitude at p; throws BoundError outside the truncation.
  void add(OamPair p, Complex value);
  double norm() const;
  bool is_zero() const;

  Vector dense() const;

private:
  ModeSpace space_;
  std::map<OamPair, Complex> amplitudes_;
};

/// Scales to unit norm and fixes the global phase: the largest-magnitude
/// amplitude becomes real-positive. Ties (within 1e-12 relative) go to the
/// term with the smallest |l_s|+|l_i|, then to the smallest (l_s, l_i).
BiphotonKet normalize(const BiphotonKet& ket);

/// <a|b>, conjugate-linear in a.
Complex inner_product(const BiphotonKet& a, const BiphotonKet& b);

/// Hermitian, unit-trace, positive-semidefinite operator on a ModeSpace.
class DensityOperator {
public:
  /// Validates the matrix; throws InvalidStateError or DimensionError.
  DensityOperator(ModeSpace space, Matrix matrix);

  const ModeSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  Complex operator()(OamPair row, OamPair col) const;

  static DensityOperator maximally_mixed(const ModeSpace& space, const std::vector<int>& modes);

private:
  ModeSpace space_;
  Matrix matrix_;
};

/// Throws InvalidStateError when m is not Hermitian, unit-trace and PSD
/// within kOperatorTolerance.
void validate_density_matrix(const Matrix& m);

DensityOperator ket_to_density(const BiphotonKet& ket);

/// Tr(|psi><psi| rho). The result is clamped into [0, 1] when it lies
/// outside by less than kOperatorTolerance.
double fidelity(const BiphotonKet& target, const DensityOperator& rho);

double trace_distance(const Matrix& a, const Matrix& b);

/// One ket per photon; the projector is |a><a| (x) |b><b|.
struct MeasurementSetting {
  ModeKet signal;
  ModeKet idler;

  bool operator==(const MeasurementSetting&) const = default;
};

/// Throws InvalidStateError when either ket is not normalized to 1e-12.
void validate_setting(const MeasurementSetting& setting);

/// Dense product vector |a> (x) |b> in the joint space.
Vector setting_vector(const ModeSpace& space, const MeasurementSetting& setting);

/// <a|<b| rho |a>|b>
double projection_probability(const DensityOperator& rho, const MeasurementSetting& setting);

} // namespace pathid
