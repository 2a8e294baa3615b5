#include "pathid/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "pathid/kernels.hpp"
#include "pathid/rng.hpp"

namespace pathid {

namespace {

std::vector<int> support_union(const std::vector<MeasurementSetting>& settings, bool signal) {
  std::set<int> modes;
  for (const auto& s : settings) {
    for (const auto& [ell, a] : (signal ? s.signal : s.idler).amplitudes()) {
      if (a != Complex{}) modes.insert(ell);
    }
  }
  return {modes.begin(), modes.end()};
}

int position(const std::vector<int>& modes, int ell) {
  return static_cast<int>(std::lower_bound(modes.begin(), modes.end(), ell) - modes.begin());
}

} // namespace

TomographyDesign::TomographyDesign(ModeSpace space, std::vector<MeasurementSetting> settings)
    : space_(space), settings_(std::move(settings)) {
  if (settings_.empty()) throw CompletenessError("tomography design has no settings");
  for (const auto& s : settings_) {
    validate_setting(s);
    for (const auto& [ell, a] : s.signal.amplitudes()) {
      if (!space_.contains(ell)) throw DimensionError("setting mode " + std::to_string(ell) + " outside the mode space");
    }
    for (const auto& [ell, a] : s.idler.amplitudes()) {
      if (!space_.contains(ell)) throw DimensionError("setting mode " + std::to_string(ell) + " outside the mode space");
    }
  }
  signal_modes_ = support_union(settings_, true);
  idler_modes_ = support_union(settings_, false);
}

TomographyDesign TomographyDesign::standard(const std::vector<int>& modes, ModeSpace space) {
  std::vector<int> m(modes);
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  if (m.empty()) throw CompletenessError("standard design needs at least one mode");

  std::vector<ModeKet> kets;
  for (int ell : m) kets.push_back(ModeKet::basis(ell));
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      kets.push_back(ModeKet::superposition(m[a], m[b], 0.0));
      kets.push_back(ModeKet::superposition(m[a], m[b], std::numbers::pi / 2));
    }
  }
  std::vector<MeasurementSetting> settings;
  settings.reserve(kets.size() * kets.size());
  for (const auto& s : kets) {
    for (const auto& i : kets) settings.push_back({s, i});
  }
  return TomographyDesign(space, std::move(settings));
}

std::vector<OamPair> TomographyDesign::subspace_basis() const {
  std::vector<OamPair> basis;
  for (int s : signal_modes_) {
    for (int i : idler_modes_) basis.push_back({s, i});
  }
  return basis;
}

Matrix TomographyDesign::subspace_vectors() const {
  const auto ni = static_cast<int>(idler_modes_.size());
  Matrix v = Matrix::Zero(subspace_dim(), static_cast<Eigen::Index>(settings_.size()));
  for (std::size_t k = 0; k < settings_.size(); ++k) {
    for (const auto& [ls, as] : settings_[k].signal.amplitudes()) {
      for (const auto& [li, ai] : settings_[k].idler.amplitudes()) {
        v(position(signal_modes_, ls) * ni + position(idler_modes_, li), static_cast<Eigen::Index>(k)) += as * ai;
      }
    }
  }
  return v;
}

int TomographyDesign::measurement_rank() const {
  const Matrix v = subspace_vectors();
  const auto dim = v.rows();
  Matrix a(v.cols(), dim * dim);
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    const Matrix proj = v.col(k) * v.col(k).adjoint();
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) a(k, r * dim + c) = proj(r, c);
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

void TomographyDesign::require_complete() const {
  const int rank = measurement_rank();
  const int need = subspace_dim() * subspace_dim();
  if (rank != need) {
    throw CompletenessError("design is not informationally complete: rank " + std::to_string(rank) +
                            " of " + std::to_string(need));
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> mean_counts(const DensityOperator& rho, const TomographyDesign& design, double rate_scale,
                                double time) {
  if (!(rate_scale > 0.0) || !(time > 0.0)) throw ArgumentError("rate_scale and time must be positive");
  if (!(rho.space() == design.space())) throw DimensionError("state and design use different mode spaces");
  std::vector<double> means;
  means.reserve(design.size());
  for (const auto& s : design.settings()) means.push_back(rate_scale * time * projection_probability(rho, s));
  return means;
}

} // namespace

std::vector<CountRecord> simulate_counts(const DensityOperator& rho, const TomographyDesign& design,
                                         double rate_scale, double time, std::uint64_t seed, Backend backend) {
  const auto means = mean_counts(rho, design, rate_scale, time);
  std::vector<std::int64_t> counts(means.size());
  if (backend == Backend::OpenMP) {
    kernels::omp::poisson_counts(means, seed, 0, counts);
  } else {
    kernels::serial::poisson_counts(means, seed, 0, counts);
  }
  std::vector<CountRecord> out;
  out.reserve(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    out.push_back({design.settings()[k], counts[k], time, rate_scale});
  }
  return out;
}

std::vector<CountRecord> expected_counts(const DensityOperator& rho, const TomographyDesign& design,
                                         double rate_scale, double time) {
  const auto means = mean_counts(rho, design, rate_scale, time);
  std::vector<CountRecord> out;
  out.reserve(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    out.push_back({design.settings()[k], std::llround(means[k]), time, rate_scale});
  }
  return out;
}

// ---------------------------------------------------------------------------

VisibilityFit visibility(const std::vector<FringeSample>& fringe) {
  const auto n = static_cast<Eigen::Index>(fringe.size());
  if (n < 8) throw ArgumentError("visibility fit needs at least 8 phase samples");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : fringe) {
    lo = std::min(lo, s.phi);
    hi = std::max(hi, s.phi);
  }
  const double coverage = (hi - lo) * static_cast<double>(n) / static_cast<double>(n - 1);
  if (coverage < 2.0 * std::numbers::pi * (1.0 - 1e-9)) {
    throw ArgumentError("phase samples must cover a full period");
  }

  // Start from the discrete extrema.
  auto [mn, mx] = std::minmax_element(fringe.begin(), fringe.end(),
                                      [](const auto& a, const auto& b) { return a.counts < b.counts; });
  if (mx->counts + mn->counts <= 0.0) throw FitError("fringe has no counts");
  Eigen::Vector3d p((mx->counts + mn->counts) / 2.0, (mx->counts - mn->counts) / (mx->counts + mn->counts),
                    -mx->phi);

  Eigen::VectorXd phi(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i) = fringe[static_cast<std::size_t>(i)].phi;
    y(i) = fringe[static_cast<std::size_t>(i)].counts;
  }
  auto residual = [&](const Eigen::Vector3d& q) {
    return Eigen::VectorXd(y.array() - q(0) * (1.0 + q(1) * (phi.array() + q(2)).cos()));
  };
  auto jacobian = [&](const Eigen::Vector3d& q) {
    Eigen::MatrixXd j(n, 3);
    const Eigen::ArrayXd c = (phi.array() + q(2)).cos();
    const Eigen::ArrayXd s = (phi.array() + q(2)).sin();
    j.col(0) = (1.0 + q(1) * c).matrix();
    j.col(1) = (q(0) * c).matrix();
    j.col(2) = (-q(0) * q(1) * s).matrix();
    return j;
  };

  Eigen::VectorXd r = residual(p);
  double rss = r.squaredNorm();
  int it = 0;
  for (; it < 200; ++it) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::Vector3d step = j.completeOrthogonalDecomposition().solve(r);
    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      const Eigen::Vector3d trial = p + t * step;
      const Eigen::VectorXd rt = residual(trial);
      if (rt.squaredNorm() <= rss) {
        p = trial;
        r = rt;
        improved = rss - rt.squaredNorm() > 0.0;
        rss = rt.squaredNorm();
        break;
      }
    }
    if (!improved || (t * step).norm() <= 1e-15 * (1.0 + p.norm())) break;
  }

  if (!(p(0) > 0.0)) throw FitError("fitted fringe amplitude is not positive");
  if (p(1) < 0.0) {
    p(1) = -p(1);
    p(2) += std::numbers::pi;
  }
  p(2) = std::remainder(p(2), 2.0 * std::numbers::pi);

  const Eigen::MatrixXd j = jacobian(p);
  const double sigma2 = n > 3 ? rss / static_cast<double>(n - 3) : 0.0;
  const Eigen::Matrix3d cov = sigma2 * (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  return {p(1), std::sqrt(std::max(cov(1, 1), 0.0)), p(0), p(2), it};
}

std::vector<FringeSample> phase_scan(const ChainConfig& chain, const DistinguishabilityModel& disting,
                                     std::size_t stage, const MeasurementSetting& setting,
                                     const std::vector<double>& phis, double rate, double time,
                                     std::uint64_t seed, bool noiseless) {
  if (stage >= chain.stages.size() || !std::holds_alternative<PhaseShifter>(chain.stages[stage])) {
    throw ArgumentError("phase-scan stage " + std::to_string(stage) + " is not a phase shifter");
  }
  if (!(rate > 0.0) || !(time > 0.0)) throw ArgumentError("rate and time must be positive");
  std::vector<FringeSample> out;
  out.reserve(phis.size());
  ChainConfig scan = chain;
  for (std::size_t k = 0; k < phis.size(); ++k) {
    scan.stages[stage] = PhaseShifter{phis[k]};
    double mean = 0.0;
    try {
      const SourceOutput src = build_source(scan, disting);
      mean = rate * time * src.relative_brightness * projection_probability(src.rho, setting);
    } catch (const ZeroStateError&) {
      mean = 0.0;  // fully destructive interference
    }
    const double counts = noiseless ? mean : static_cast<double>(rng::poisson(rng::stream_key(seed, 0, k), mean));
    out.push_back({phis[k], counts});
  }
  return out;
}

Eigen::MatrixXd crosstalk_matrix(const DensityOperator& rho, const std::vector<int>& ell_range) {
  const auto n = static_cast<Eigen::Index>(ell_range.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = projection_probability(
          rho, {ModeKet::basis(ell_range[static_cast<std::size_t>(i)]), ModeKet::basis(ell_range[static_cast<std::size_t>(j)])});
    }
  }
  const double mx = n > 0 ? m.maxCoeff() : 0.0;
  if (mx > 0.0) m /= mx;
  return m;
}

double dominance_ratio(const Eigen::MatrixXd& m) {
  double first = 0.0;
  double second = 0.0;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const double v = m.data()[k];
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return second > 0.0 ? first / second : std::numeric_limits<double>::infinity();
}

} // namespace pathid
