#pragma once

#include <variant>
#include <vector>

#include "pathid/oam_core.hpp"

namespace pathid {

/// One SPDC crystal. The pair spectrum is a symmetric ladder
/// sum_k alpha_k (|m+k, m-k> + |m-k, m+k>) around m = pump_oam / 2,
/// with a single |m, m> term for k = 0.
struct CrystalSpec {
  double pump_amplitude = 1.0;
  int pump_oam = 0;
  std::vector<Complex> spiral = {Complex(1.0, 0.0)};

  bool operator==(const CrystalSpec&) const = default;
};

struct PumpModeShifter {
  int delta_oam = 0;
  bool operator==(const PumpModeShifter&) const = default;
};

struct DownconversionModeShifter {
  int delta_per_photon = 0;
  bool operator==(const DownconversionModeShifter&) const = default;
};

struct PhaseShifter {
  double phi = 0.0; // radians
  bool operator==(const PhaseShifter&) const = default;
};

/// Inverts the sign of the pump OAM seen by every downstream crystal.
struct Mirror {
  bool operator==(const Mirror&) const = default;
};

using ChainStage = std::variant<CrystalSpec, PumpModeShifter, DownconversionModeShifter, PhaseShifter, Mirror>;

struct ChainConfig {
  std::vector<ChainStage> stages;
  ModeSpace space;

  std::size_t crystal_count() const;
  bool operator==(const ChainConfig&) const = default;
};

/// Error raised while walking a chain; carries the offending stage index so
/// the setup parser can point at the right line.
class StageError : public ChainError {
public:
  enum class Reason { OddPump, Truncation, Weight, Spiral };

  StageError(std::size_t stage, Reason reason, const std::string& what)
      : ChainError(what), stage_(stage), reason_(reason) {}
  std::size_t stage() const { return stage_; }
  Reason reason() const { return reason_; }

private:
  std::size_t stage_;
  Reason reason_;
};

/// Normalized spiral profile: sum_k m_k |alpha_k|^2 = 1 with m_0 = 1, m_k = 2.
std::vector<Complex> normalized_spiral(const std::vector<Complex>& spiral);

/// Normalized pair emission of a single crystal. Odd pump OAM throws
/// UnsupportedPumpError, terms outside the space throw BoundError.
BiphotonKet crystal_emission(const CrystalSpec& spec, const ModeSpace& space = ModeSpace{});

/// Contribution of one crystal after every downstream stage has acted on it.
struct CrystalContribution {
  std::size_t stage = 0;  // index of the crystal stage in the chain
  double weight = 0.0;    // pump amplitude
  BiphotonKet ket;        // unit norm
};

/// Per-crystal contributions in chain order. Checks every intermediate OAM
/// value against the truncation; throws StageError with the stage index.
std::vector<CrystalContribution> chain_contributions(const ChainConfig& chain);

/// Coherent sum of all weighted contributions, normalized.
BiphotonKet build_state(const ChainConfig& chain);

/// Relative phases phibar_i = sum_{j=d-i}^{d-1} phi_j of a canonical chain
/// Crystal, {Phase, Shift}, Crystal, ..., Crystal (d crystals). Throws
/// ShapeError for any other layout.
std::vector<double> accumulated_phases(const ChainConfig& chain);

/// Pairwise overlap gamma(i, j) between crystal contributions; symmetric,
/// unit diagonal, entries in [0, 1], PSD.
class DistinguishabilityModel {
public:
  explicit DistinguishabilityModel(Eigen::MatrixXd overlap);

  static DistinguishabilityModel coherent(std::size_t crystals);
  static DistinguishabilityModel uniform(std::size_t crystals, double gamma);

  std::size_t size() const { return static_cast<std::size_t>(overlap_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return overlap_(i, j); }
  const Eigen::MatrixXd& matrix() const { return overlap_; }

private:
  Eigen::MatrixXd overlap_;
};

/// Mixed output state plus the source brightness relative to fully
/// incoherent emission (tr of the unnormalized operator / sum_i w_i^2).
struct SourceOutput {
  DensityOperator rho;
  double relative_brightness = 1.0;
};

SourceOutput build_source(const ChainConfig& chain, const DistinguishabilityModel& disting);

/// rho = sum_ij gamma_ij w_i w_j |e_i><e_j|, renormalized to unit trace.
DensityOperator build_density(const ChainConfig& chain, const DistinguishabilityModel& disting);

struct CoherenceGeometry {
  double l_pump_a = 0.0;   // mm
  double l_pump_b = 0.0;   // mm
  double l_spdc = 0.0;     // mm
  double l_coherence = 0.0; // mm
};

/// |L_pB - L_pA - L_SPDC| <= L_coh
bool coherence_satisfied(const CoherenceGeometry& geom);

/// Signed slack L_coh - |L_pB - L_pA - L_SPDC|; negative when incoherent.
double coherence_slack(const CoherenceGeometry& geom);

} // namespace pathid
