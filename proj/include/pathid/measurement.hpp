#pragma once

#include <cstdint>
#include <vector>

#include "pathid/oam_core.hpp"
#include "pathid/source_chain.hpp"

namespace pathid {

enum class Backend { Serial, OpenMP };

struct CountRecord {
  MeasurementSetting setting;
  std::int64_t counts = 0;
  double integration_time = 1.0;  // s
  double rate_scale = 0.0;        // expected pairs per second; 0 when unknown

  bool operator==(const CountRecord&) const = default;
};

/// Ordered list of projective settings over a product subspace
/// signal_modes x idler_modes of a ModeSpace.
class TomographyDesign {
public:
  TomographyDesign(ModeSpace space, std::vector<MeasurementSetting> settings);

  /// Per photon: |l> for every mode plus (|a> + e^{i theta}|b>)/sqrt(2) for
  /// every pair a < b and theta in {0, pi/2}; all signal/idler combinations.
  static TomographyDesign standard(const std::vector<int>& modes, ModeSpace space = ModeSpace{});

  const ModeSpace& space() const { return space_; }
  const std::vector<MeasurementSetting>& settings() const { return settings_; }
  std::size_t size() const { return settings_.size(); }

  const std::vector<int>& signal_modes() const { return signal_modes_; }
  const std::vector<int>& idler_modes() const { return idler_modes_; }
  /// Subspace basis in row-major (signal, idler) order.
  std::vector<OamPair> subspace_basis() const;
  int subspace_dim() const { return static_cast<int>(signal_modes_.size() * idler_modes_.size()); }

  /// Columns are the product kets of every setting in subspace coordinates.
  Matrix subspace_vectors() const;

  int measurement_rank() const;
  bool informationally_complete() const { return measurement_rank() == subspace_dim() * subspace_dim(); }
  /// Throws CompletenessError unless the projectors span the operator space.
  void require_complete() const;

private:
  ModeSpace space_;
  std::vector<MeasurementSetting> settings_;
  std::vector<int> signal_modes_;
  std::vector<int> idler_modes_;
};

/// Counts ~ Poisson(rate_scale * time * p_k), keyed by (seed, record index).
std::vector<CountRecord> simulate_counts(const DensityOperator& rho, const TomographyDesign& design,
                                         double rate_scale, double time, std::uint64_t seed,
                                         Backend backend = Backend::OpenMP);

/// Noiseless records: counts are the Poisson means rounded to integers.
std::vector<CountRecord> expected_counts(const DensityOperator& rho, const TomographyDesign& design,
                                         double rate_scale, double time);

struct FringeSample {
  double phi = 0.0;
  double counts = 0.0;
};

struct VisibilityFit {
  double visibility = 0.0;
  double visibility_err = 0.0;
  double amplitude = 0.0;
  double phase_offset = 0.0;
  int iterations = 0;
};

/// Least-squares fit of A (1 + V cos(phi + phi0)). Needs at least eight
/// samples covering a full period; throws FitError when A <= 0.
VisibilityFit visibility(const std::vector<FringeSample>& fringe);

/// Phase scan of the source: the PhaseShifter at `stage` is set to each phi
/// in turn and coincidences in `setting` are recorded. Mean counts are
/// rate * time * brightness * p, where brightness follows path-identity
/// interference of the emission rate. Poisson noise when noiseless is false.
std::vector<FringeSample> phase_scan(const ChainConfig& chain, const DistinguishabilityModel& disting,
                                     std::size_t stage, const MeasurementSetting& setting,
                                     const std::vector<double>& phis, double rate, double time,
                                     std::uint64_t seed, bool noiseless);

/// Coincidence probabilities for (|l_i>, |l_j>) scaled so the largest is 1.
Eigen::MatrixXd crosstalk_matrix(const DensityOperator& rho, const std::vector<int>& ell_range);

/// Largest entry divided by the next largest; infinity when only one is nonzero.
double dominance_ratio(const Eigen::MatrixXd& m);

} // namespace pathid
