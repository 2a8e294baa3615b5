#include "pathid/oam_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace pathid {

ModeSpace::ModeSpace(int truncation) : truncation_(truncation) {
  if (truncation < 0) {
    throw BoundError("truncation must be non-negative, got " + std::to_string(truncation));
  }
}

int ModeSpace::photon_index(int ell) const {
  if (!contains(ell)) {
    throw BoundError("OAM value " + std::to_string(ell) + " outside truncation " +
                     std::to_string(truncation_));
  }
  return ell + truncation_;
}

int ModeSpace::ell_at(int photon_index) const {
  if (photon_index < 0 || photon_index >= photon_dim()) {
    throw BoundError("photon index out of range");
  }
  return photon_index - truncation_;
}

int ModeSpace::joint_index(OamPair p) const {
  return photon_index(p.signal) * photon_dim() + photon_index(p.idler);
}

OamPair ModeSpace::pair_at(int joint_index) const {
  if (joint_index < 0 || joint_index >= joint_dim()) {
    throw BoundError("joint index out of range");
  }
  return {ell_at(joint_index / photon_dim()), ell_at(joint_index % photon_dim())};
}

// ---------------------------------------------------------------------------

ModeKet::ModeKet(std::map<int, Complex> amplitudes) : amplitudes_(std::move(amplitudes)) {}

ModeKet ModeKet::basis(int ell) { return ModeKet({{ell, Complex(1.0, 0.0)}}); }

ModeKet ModeKet::superposition(int a, int b, double theta) {
  const double s = 1.0 / std::sqrt(2.0);
  return ModeKet({{a, Complex(s, 0.0)}, {b, s * std::polar(1.0, theta)}});
}

Complex ModeKet::amplitude(int ell) const {
  auto it = amplitudes_.find(ell);
  return it == amplitudes_.end() ? Complex{} : it->second;
}

double ModeKet::norm() const {
  double s = 0.0;
  for (const auto& [ell, a] : amplitudes_) s += std::norm(a);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

BiphotonKet::BiphotonKet(ModeSpace space) : space_(space) {}

BiphotonKet::BiphotonKet(ModeSpace space, std::map<OamPair, Complex> amplitudes) : space_(space) {
  for (const auto& [p, a] : amplitudes) add(p, a);
}

Complex BiphotonKet::amplitude(OamPair p) const {
  auto it = amplitudes_.find(p);
  return it == amplitudes_.end() ? Complex{} : it->second;
}

void BiphotonKet::add(OamPair p, Complex value) {
  if (!space_.contains(p)) {
    throw BoundError("ket term |" + std::to_string(p.signal) + "," + std::to_string(p.idler) +
                     "> outside truncation " + std::to_string(space_.truncation()));
  }
  amplitudes_[p] += value;
}

double BiphotonKet::norm() const {
  double s = 0.0;
  for (const auto& [p, a] : amplitudes_) s += std::norm(a);
  return std::sqrt(s);
}

bool BiphotonKet::is_zero() const {
  return std::all_of(amplitudes_.begin(), amplitudes_.end(),
                     [](const auto& kv) { return kv.second == Complex{}; });
}

Vector BiphotonKet::dense() const {
  Vector v = Vector::Zero(space_.joint_dim());
  for (const auto& [p, a] : amplitudes_) v(space_.joint_index(p)) = a;
  return v;
}

namespace {

int order(OamPair p) { return std::abs(p.signal) + std::abs(p.idler); }

} // namespace

BiphotonKet normalize(const BiphotonKet& ket) {
  const double n = ket.norm();
  if (n == 0.0 || !std::isfinite(n)) throw ZeroStateError("cannot normalize an all-zero ket");

  double max_mag = 0.0;
  for (const auto& [p, a] : ket.amplitudes()) max_mag = std::max(max_mag, std::abs(a));

  const OamPair* ref = nullptr;
  Complex ref_amp;
  for (const auto& [p, a] : ket.amplitudes()) {
    if (std::abs(a) < max_mag * (1.0 - 1e-12)) continue;
    if (ref == nullptr || order(p) < order(*ref)) {
      ref = &p;
      ref_amp = a;
    }
  }
  const Complex phase = std::conj(ref_amp) / std::abs(ref_amp);

  BiphotonKet out(ket.space());
  for (const auto& [p, a] : ket.amplitudes()) {
    if (a == Complex{}) continue;
    out.add(p, a * phase / n);
  }
  return out;
}

Complex inner_product(const BiphotonKet& a, const BiphotonKet& b) {
  if (!(a.space() == b.space())) throw DimensionError("inner product of kets in different spaces");
  Complex s{};
  for (const auto& [p, amp] : a.amplitudes()) s += std::conj(amp) * b.amplitude(p);
  return s;
}

// ---------------------------------------------------------------------------

void validate_density_matrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("density matrix must be square");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kOperatorTolerance) {
    throw InvalidStateError("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const Complex tr = m.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > kOperatorTolerance) {
    throw InvalidStateError("density matrix trace " + std::to_string(tr.real()) + " != 1");
  }
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kOperatorTolerance) {
    throw InvalidStateError("density matrix not positive semidefinite (min eigenvalue " +
                            std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

DensityOperator::DensityOperator(ModeSpace space, Matrix matrix)
    : space_(space), matrix_(std::move(matrix)) {
  if (matrix_.rows() != space_.joint_dim() || matrix_.cols() != space_.joint_dim()) {
    throw DimensionError("density matrix is " + std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()) + ", space needs " +
                         std::to_string(space_.joint_dim()));
  }
  validate_density_matrix(matrix_);
}

Complex DensityOperator::operator()(OamPair row, OamPair col) const {
  return matrix_(space_.joint_index(row), space_.joint_index(col));
}

DensityOperator DensityOperator::maximally_mixed(const ModeSpace& space,
                                                 const std::vector<int>& modes) {
  if (modes.empty()) throw DimensionError("maximally mixed state needs at least one mode");
  Matrix m = Matrix::Zero(space.joint_dim(), space.joint_dim());
  const double w = 1.0 / static_cast<double>(modes.size() * modes.size());
  for (int s : modes) {
    for (int i : modes) {
      const int k = space.joint_index({s, i});
      m(k, k) = w;
    }
  }
  return DensityOperator(space, std::move(m));
}

DensityOperator ket_to_density(const BiphotonKet& ket) {
  if (std::abs(ket.norm() - 1.0) > kNormTolerance) {
    throw InvalidStateError("ket_to_density requires a normalized ket");
  }
  const Vector v = ket.dense();
  return DensityOperator(ket.space(), v * v.adjoint());
}

double fidelity(const BiphotonKet& target, const DensityOperator& rho) {
  if (!(target.space() == rho.space())) throw DimensionError("fidelity of objects in different spaces");
  if (std::abs(target.norm() - 1.0) > kNormTolerance) {
    throw InvalidStateError("fidelity target must be normalized");
  }
  Complex f{};
  for (const auto& [r, ar] : target.amplitudes()) {
    for (const auto& [c, ac] : target.amplitudes()) {
      f += std::conj(ar) * rho(r, c) * ac;
    }
  }
  double v = f.real();
  if (v < 0.0 && v > -kOperatorTolerance) v = 0.0;
  if (v > 1.0 && v < 1.0 + kOperatorTolerance) v = 1.0;
  return v;
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("trace distance shape mismatch");
  const Matrix d = a - b;
  const Matrix h = 0.5 * (d + d.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void validate_setting(const MeasurementSetting& setting) {
  if (std::abs(setting.signal.norm() - 1.0) > kNormTolerance ||
      std::abs(setting.idler.norm() - 1.0) > kNormTolerance) {
    throw InvalidStateError("measurement setting kets must be normalized");
  }
}

Vector setting_vector(const ModeSpace& space, const MeasurementSetting& setting) {
  Vector v = Vector::Zero(space.joint_dim());
  for (const auto& [ls, as] : setting.signal.amplitudes()) {
    for (const auto& [li, ai] : setting.idler.amplitudes()) {
      v(space.joint_index({ls, li})) += as * ai;
    }
  }
  return v;
}

double projection_probability(const DensityOperator& rho, const MeasurementSetting& setting) {
  validate_setting(setting);
  const ModeSpace& space = rho.space();
  // Sparse evaluation of v^dagger rho v over the support of the product ket.
  std::vector<std::pair<int, Complex>> support;
  for (const auto& [ls, as] : setting.signal.amplitudes()) {
    for (const auto& [li, ai] : setting.idler.amplitudes()) {
      if (!space.contains(ls) || !space.contains(li)) {
        throw DimensionError("measurement setting outside the state's mode space");
      }
      support.emplace_back(space.joint_index({ls, li}), as * ai);
    }
  }
  Complex p{};
  for (const auto& [r, vr] : support) {
    for (const auto& [c, vc] : support) p += std::conj(vr) * rho.matrix()(r, c) * vc;
  }
  return std::clamp(p.real(), 0.0, 1.0);
}

} // namespace pathid
