#include "pathid/tomography.hpp"

#include <cmath>
#include <exception>
#include <numeric>

#include "pathid/kernels.hpp"
#include "pathid/rng.hpp"

namespace pathid {

namespace {

kernels::LikelihoodTerms evaluate(const Matrix& sigma, const Matrix& vecs, const std::vector<double>& counts,
                                  Backend backend) {
  return backend == Backend::OpenMP ? kernels::omp::likelihood_terms(sigma, vecs, counts)
                                    : kernels::serial::likelihood_terms(sigma, vecs, counts);
}

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

} // namespace

ReconstructionResult mle_reconstruct(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                     const MleOptions& options) {
  design.require_complete();
  if (records.empty()) throw CompletenessError("no count records");

  std::vector<MeasurementSetting> settings;
  std::vector<double> counts;
  std::vector<double> times;
  settings.reserve(records.size());
  for (const auto& r : records) {
    if (r.counts < 0) throw ArgumentError("negative count");
    if (!(r.integration_time > 0.0)) throw ArgumentError("integration time must be positive");
    settings.push_back(r.setting);
    counts.push_back(static_cast<double>(r.counts));
    times.push_back(r.integration_time);
  }
  if (std::accumulate(counts.begin(), counts.end(), 0.0) <= 0.0) throw ArgumentError("total counts must be positive");

  const TomographyDesign effective(design.space(), std::move(settings));
  effective.require_complete();
  if (effective.signal_modes() != design.signal_modes() || effective.idler_modes() != design.idler_modes()) {
    throw CompletenessError("count records do not cover the design subspace");
  }

  Matrix vecs = effective.subspace_vectors();
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) vecs.col(k) *= std::sqrt(times[static_cast<std::size_t>(k)]);
  const auto dim = vecs.rows();

  // Whitening: G^{-1/2} maps the settings onto a POVM summing to identity.
  const Matrix g = hermitize(vecs * vecs.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw CompletenessError("settings do not cover the subspace");
  const Matrix g_inv_half = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  const Matrix whitened = g_inv_half * vecs;

  // rho_0 = I / dim corresponds to sigma_0 = G / tr G.
  Matrix sigma = g / g.trace().real();
  kernels::LikelihoodTerms terms = evaluate(sigma, whitened, counts, options.backend);

  ReconstructionResult result{DensityOperator::maximally_mixed(design.space(), {0}), Matrix{}, {}, 0, false, 0.0,
                              0.0, 0.0, {}};
  if (options.record_history) result.log_likelihood_history.push_back(terms.log_likelihood);

  const Matrix id = Matrix::Identity(dim, dim);
  int it = 0;
  for (; it < options.max_iter; ++it) {
    double t = options.dilution;
    bool accepted = false;
    Matrix next;
    kernels::LikelihoodTerms next_terms;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Matrix step = (1.0 - t) * id + t * terms.r;
      next = hermitize(step * sigma * step.adjoint());
      next /= next.trace().real();
      next_terms = evaluate(next, whitened, counts, options.backend);
      if (next_terms.log_likelihood >= terms.log_likelihood) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      result.converged = true;
      break;
    }
    const double delta = (next - sigma).cwiseAbs().maxCoeff();
    sigma = std::move(next);
    terms = std::move(next_terms);
    if (options.record_history) result.log_likelihood_history.push_back(terms.log_likelihood);
    if (delta < options.tol) {
      result.converged = true;
      ++it;
      break;
    }
  }

  Matrix rho_sub = hermitize(g_inv_half * sigma * g_inv_half);
  rho_sub /= rho_sub.trace().real();

  const ModeSpace& space = design.space();
  const auto basis = effective.subspace_basis();
  Matrix full = Matrix::Zero(space.joint_dim(), space.joint_dim());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      full(space.joint_index(basis[r]), space.joint_index(basis[c])) =
          rho_sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }

  result.rho = DensityOperator(space, std::move(full));
  result.subspace_rho = std::move(rho_sub);
  result.subspace_basis = basis;
  result.iterations = it;
  result.log_likelihood = terms.log_likelihood;
  return result;
}

ReconstructionResult mle_reconstruct(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                     int max_iter, double tol) {
  MleOptions options;
  options.max_iter = max_iter;
  options.tol = tol;
  return mle_reconstruct(records, design, options);
}

BootstrapSummary bootstrap_fidelity(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                    const BiphotonKet& target, int resamples, std::uint64_t seed,
                                    const MleOptions& options, Backend backend) {
  if (resamples < 10) throw ArgumentError("bootstrap needs at least 10 resamples");

  BootstrapSummary out;
  out.samples.assign(static_cast<std::size_t>(resamples), 0.0);
  std::exception_ptr failure;

  auto one = [&](int r) {
    std::vector<CountRecord> redrawn(records);
    for (std::size_t k = 0; k < redrawn.size(); ++k) {
      redrawn[k].counts = rng::poisson(rng::stream_key(seed, static_cast<std::uint64_t>(r) + 1, k),
                                       static_cast<double>(records[k].counts));
    }
    out.samples[static_cast<std::size_t>(r)] = fidelity(target, mle_reconstruct(redrawn, design, options).rho);
  };

  if (backend == Backend::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < resamples; ++r) {
      try {
        one(r);
      } catch (...) {
#pragma omp critical(pathid_bootstrap_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (int r = 0; r < resamples; ++r) one(r);
  }
  if (failure) std::rethrow_exception(failure);

  const double n = static_cast<double>(resamples);
  out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double f : out.samples) ss += (f - out.mean) * (f - out.mean);
  out.stddev = std::sqrt(ss / (n - 1.0));
  return out;
}

} // namespace pathid
