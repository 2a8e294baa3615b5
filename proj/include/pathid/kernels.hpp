#pragma once

#include <cstdint>
#include <span>

#include "pathid/oam_core.hpp"

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp with identical
// results (up to floating-point summation order for reductions).
namespace pathid::kernels {

/// Outputs of one likelihood evaluation on a normalized POVM.
struct LikelihoodTerms {
  Matrix r;               // sum_k (f_k / q_k) |v_k><v_k|
  double log_likelihood;  // sum_k n_k ln q_k
};

namespace serial {

/// out[i] ~ Poisson(means[i]) drawn from stream_key(seed, stream, i).
void poisson_counts(std::span<const double> means, std::uint64_t seed, std::uint64_t stream,
                    std::span<std::int64_t> out);

/// q_k = v_k^dagger sigma v_k for the columns of vecs.
void probabilities(const Matrix& sigma, const Matrix& vecs, std::span<double> q);

/// R operator and log-likelihood for counts over the columns of vecs.
LikelihoodTerms likelihood_terms(const Matrix& sigma, const Matrix& vecs, std::span<const double> counts);

} // namespace serial

namespace omp {

void poisson_counts(std::span<const double> means, std::uint64_t seed, std::uint64_t stream,
                    std::span<std::int64_t> out);

void probabilities(const Matrix& sigma, const Matrix& vecs, std::span<double> q);

LikelihoodTerms likelihood_terms(const Matrix& sigma, const Matrix& vecs, std::span<const double> counts);

} // namespace omp

/// Number of OpenMP threads available to the omp kernels.
int max_threads();

} // namespace pathid::kernels
