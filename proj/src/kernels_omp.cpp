#include "pathid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "pathid/rng.hpp"

namespace pathid::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace omp {

void poisson_counts(std::span<const double> means, std::uint64_t seed, std::uint64_t stream,
                    std::span<std::int64_t> out) {
  const auto n = static_cast<std::int64_t>(means.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = rng::poisson(rng::stream_key(seed, stream, u), means[u]);
  }
}

void probabilities(const Matrix& sigma, const Matrix& vecs, std::span<double> q) {
  const auto cols = vecs.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < cols; ++k) {
    const auto v = vecs.col(k);
    q[static_cast<std::size_t>(k)] = std::max(v.dot(sigma * v).real(), 0.0);
  }
}

LikelihoodTerms likelihood_terms(const Matrix& sigma, const Matrix& vecs, std::span<const double> counts) {
  const auto dim = sigma.rows();
  const auto cols = vecs.cols();
  double total = 0.0;
  for (double n : counts) total += n;

  const int threads = omp_get_max_threads();
  std::vector<Matrix> partial(static_cast<std::size_t>(threads), Matrix::Zero(dim, dim));
  double loglik = 0.0;

#pragma omp parallel reduction(+ : loglik)
  {
    Matrix& r = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const double n = counts[static_cast<std::size_t>(k)];
      if (n <= 0.0) continue;
      const auto v = vecs.col(k);
      const double q = std::max(v.dot(sigma * v).real(), 1e-300);
      loglik += n * std::log(q);
      r.noalias() += (n / (total * q)) * v * v.adjoint();
    }
  }

  LikelihoodTerms out{Matrix::Zero(dim, dim), loglik};
  for (const auto& r : partial) out.r += r;
  return out;
}

} // namespace omp
} // namespace pathid::kernels
