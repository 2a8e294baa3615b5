#include "pathid/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "pathid/rng.hpp"

namespace pathid::kernels::serial {

void poisson_counts(std::span<const double> means, std::uint64_t seed, std::uint64_t stream,
                    std::span<std::int64_t> out) {
  for (std::size_t i = 0; i < means.size(); ++i) {
    out[i] = rng::poisson(rng::stream_key(seed, stream, i), means[i]);
  }
}

void probabilities(const Matrix& sigma, const Matrix& vecs, std::span<double> q) {
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    const auto v = vecs.col(k);
    q[static_cast<std::size_t>(k)] = std::max(v.dot(sigma * v).real(), 0.0);
  }
}

LikelihoodTerms likelihood_terms(const Matrix& sigma, const Matrix& vecs, std::span<const double> counts) {
  const auto dim = sigma.rows();
  LikelihoodTerms out{Matrix::Zero(dim, dim), 0.0};
  double total = 0.0;
  for (double n : counts) total += n;
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    const double n = counts[static_cast<std::size_t>(k)];
    if (n <= 0.0) continue;
    const auto v = vecs.col(k);
    const double q = std::max(v.dot(sigma * v).real(), 1e-300);
    out.log_likelihood += n * std::log(q);
    out.r.noalias() += (n / (total * q)) * v * v.adjoint();
  }
  return out;
}

} // namespace pathid::kernels::serial
