#pragma once

#include <cstdint>
#include <vector>

#include "pathid/measurement.hpp"

namespace pathid {

struct MleOptions {
  int max_iter = 10000;
  double tol = 1e-10;
  /// Weight of R in the step operator (1 - t) I + t R; halved on any step
  /// that would lower the likelihood.
  double dilution = 0.5;
  Backend backend = Backend::Serial;
  bool record_history = false;
};

struct ReconstructionResult {
  DensityOperator rho;                // embedded in the design's ModeSpace
  Matrix subspace_rho;                // on subspace_basis
  std::vector<OamPair> subspace_basis;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
  double fidelity_mean = 0.0;
  double fidelity_stddev = 0.0;
  std::vector<double> log_likelihood_history;
};

/// Maximum-likelihood state estimate by diluted R rho R iteration, started
/// from the maximally mixed state on the design subspace. Settings need not
/// sum to the identity: the iteration runs on the POVM G^{-1/2} Pi_k G^{-1/2}
/// with G = sum_k t_k Pi_k. Not converging leaves converged == false and
/// iterations == max_iter.
ReconstructionResult mle_reconstruct(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                     const MleOptions& options = {});

ReconstructionResult mle_reconstruct(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                     int max_iter, double tol);

struct BootstrapSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> samples;
};

/// Redraws each count as Poisson(observed), reconstructs, and summarizes
/// F(target, rho_hat) over the resamples. Resample r uses the streams
/// keyed by (seed, r + 1, record index).
BootstrapSummary bootstrap_fidelity(const std::vector<CountRecord>& records, const TomographyDesign& design,
                                    const BiphotonKet& target, int resamples, std::uint64_t seed,
                                    const MleOptions& options = {}, Backend backend = Backend::OpenMP);

} // namespace pathid
