#include "pathid/source_chain.hpp"

#include <cmath>
#include <string>

namespace pathid {

std::size_t ChainConfig::crystal_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += std::holds_alternative<CrystalSpec>(s) ? 1 : 0;
  return n;
}

std::vector<Complex> normalized_spiral(const std::vector<Complex>& spiral) {
  double s = 0.0;
  for (std::size_t k = 0; k < spiral.size(); ++k) s += (k == 0 ? 1.0 : 2.0) * std::norm(spiral[k]);
  if (s == 0.0 || !std::isfinite(s)) throw ZeroStateError("spiral spectrum has no weight");
  std::vector<Complex> out(spiral);
  for (auto& a : out) a /= std::sqrt(s);
  return out;
}

BiphotonKet crystal_emission(const CrystalSpec& spec, const ModeSpace& space) {
  if (spec.pump_oam % 2 != 0) {
    throw UnsupportedPumpError("odd pump OAM " + std::to_string(spec.pump_oam) + " is not supported");
  }
  const int m = spec.pump_oam / 2;
  const auto alpha = normalized_spiral(spec.spiral);
  BiphotonKet ket(space);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const int ki = static_cast<int>(k);
    if (alpha[k] == Complex{}) continue;
    if (k == 0) {
      ket.add({m, m}, alpha[0]);
    } else {
      ket.add({m + ki, m - ki}, alpha[k]);
      ket.add({m - ki, m + ki}, alpha[k]);
    }
  }
  return ket;
}

namespace {

BiphotonKet shift_both(const BiphotonKet& ket, int delta) {
  BiphotonKet out(ket.space());
  for (const auto& [p, a] : ket.amplitudes()) out.add({p.signal + delta, p.idler + delta}, a);
  return out;
}

BiphotonKet with_phase(const BiphotonKet& ket, double phi) {
  const Complex f = std::polar(1.0, phi);
  BiphotonKet out(ket.space());
  for (const auto& [p, a] : ket.amplitudes()) out.add(p, a * f);
  return out;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

} // namespace

std::vector<CrystalContribution> chain_contributions(const ChainConfig& chain) {
  if (chain.crystal_count() == 0) throw ChainError("chain has no crystal stage");

  std::vector<CrystalContribution> out;
  int pump_offset = 0;
  for (std::size_t i = 0; i < chain.stages.size(); ++i) {
    std::visit(overloaded{
                   [&](const CrystalSpec& c) {
                     if (!(c.pump_amplitude >= 0.0) || !std::isfinite(c.pump_amplitude)) {
                       throw StageError(i, StageError::Reason::Weight, "pump amplitude must be non-negative");
                     }
                     CrystalSpec eff = c;
                     eff.pump_oam += pump_offset;
                     try {
                       out.push_back({i, c.pump_amplitude, crystal_emission(eff, chain.space)});
                     } catch (const UnsupportedPumpError& e) {
                       throw StageError(i, StageError::Reason::OddPump, e.what());
                     } catch (const BoundError& e) {
                       throw StageError(i, StageError::Reason::Truncation, e.what());
                     } catch (const ZeroStateError& e) {
                       throw StageError(i, StageError::Reason::Spiral, e.what());
                     }
                   },
                   [&](const PumpModeShifter& s) { pump_offset += s.delta_oam; },
                   [&](const Mirror&) { pump_offset = -pump_offset; },
                   [&](const DownconversionModeShifter& s) {
                     try {
                       for (auto& c : out) c.ket = shift_both(c.ket, s.delta_per_photon);
                     } catch (const BoundError& e) {
                       throw StageError(i, StageError::Reason::Truncation, e.what());
                     }
                   },
                   [&](const PhaseShifter& s) {
                     for (auto& c : out) c.ket = with_phase(c.ket, s.phi);
                   },
               },
               chain.stages[i]);
  }
  return out;
}

BiphotonKet build_state(const ChainConfig& chain) {
  BiphotonKet sum(chain.space);
  for (const auto& c : chain_contributions(chain)) {
    for (const auto& [p, a] : c.ket.amplitudes()) sum.add(p, c.weight * a);
  }
  return normalize(sum);
}

std::vector<double> accumulated_phases(const ChainConfig& chain) {
  const auto& st = chain.stages;
  if (st.empty() || !std::holds_alternative<CrystalSpec>(st.front())) {
    throw ShapeError("canonical chain must start with a crystal");
  }
  // Crystal ({Phase, Shift} Crystal)*
  if ((st.size() - 1) % 3 != 0) throw ShapeError("canonical chain must interleave crystals with phase/mode-shifter pairs");
  std::vector<double> phi;
  for (std::size_t i = 1; i < st.size(); i += 3) {
    const ChainStage& a = st[i];
    const ChainStage& b = st[i + 1];
    const PhaseShifter* ph = std::get_if<PhaseShifter>(&a);
    const DownconversionModeShifter* sh = std::get_if<DownconversionModeShifter>(&b);
    if (ph == nullptr) {
      ph = std::get_if<PhaseShifter>(&b);
      sh = std::get_if<DownconversionModeShifter>(&a);
    }
    if (ph == nullptr || sh == nullptr || sh->delta_per_photon == 0) {
      throw ShapeError("stages " + std::to_string(i) + "-" + std::to_string(i + 1) +
                       " are not a phase-shifter / mode-shifter pair");
    }
    if (!std::holds_alternative<CrystalSpec>(st[i + 2])) {
      throw ShapeError("stage " + std::to_string(i + 2) + " must be a crystal");
    }
    phi.push_back(ph->phi);
  }
  // phi[j-1] holds phi_j; d - 1 = phi.size().
  const std::size_t d = phi.size() + 1;
  std::vector<double> bar(d - 1, 0.0);
  for (std::size_t i = 1; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = d - i; j <= d - 1; ++j) s += phi[j - 1];
    bar[i - 1] = s;
  }
  return bar;
}

// ---------------------------------------------------------------------------

DistinguishabilityModel::DistinguishabilityModel(Eigen::MatrixXd overlap) : overlap_(std::move(overlap)) {
  if (overlap_.rows() != overlap_.cols() || overlap_.rows() == 0) {
    throw ModelError("overlap matrix must be square and non-empty");
  }
  const auto n = overlap_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(overlap_(i, i) - 1.0) > 1e-12) throw ModelError("overlap diagonal must be 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = overlap_(i, j);
      if (!(g >= 0.0 && g <= 1.0)) throw ModelError("overlap entries must lie in [0, 1]");
      if (std::abs(g - overlap_(j, i)) > 1e-12) throw ModelError("overlap matrix must be symmetric");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(overlap_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kOperatorTolerance) {
    throw ModelError("overlap matrix is not positive semidefinite");
  }
}

DistinguishabilityModel DistinguishabilityModel::coherent(std::size_t crystals) {
  const auto n = static_cast<Eigen::Index>(crystals);
  return DistinguishabilityModel(Eigen::MatrixXd::Ones(n, n));
}

DistinguishabilityModel DistinguishabilityModel::uniform(std::size_t crystals, double gamma) {
  const auto n = static_cast<Eigen::Index>(crystals);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, gamma);
  m.diagonal().setOnes();
  return DistinguishabilityModel(std::move(m));
}

SourceOutput build_source(const ChainConfig& chain, const DistinguishabilityModel& disting) {
  const auto contrib = chain_contributions(chain);
  if (contrib.size() != disting.size()) {
    throw ModelError("overlap matrix is " + std::to_string(disting.size()) + "x" +
                     std::to_string(disting.size()) + " but the chain has " +
                     std::to_string(contrib.size()) + " crystals");
  }
  const int dim = chain.space.joint_dim();
  Matrix m = Matrix::Zero(dim, dim);
  double incoherent = 0.0;
  std::vector<Vector> e;
  e.reserve(contrib.size());
  for (const auto& c : contrib) {
    e.push_back(c.ket.dense());
    incoherent += c.weight * c.weight;
  }
  for (std::size_t i = 0; i < contrib.size(); ++i) {
    for (std::size_t j = 0; j < contrib.size(); ++j) {
      const double g = disting(i, j) * contrib[i].weight * contrib[j].weight;
      if (g == 0.0) continue;
      m.noalias() += g * e[i] * e[j].adjoint();
    }
  }
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw ZeroStateError("source emits no pairs (complete destructive interference)");
  m /= tr;
  m = 0.5 * (m + m.adjoint()).eval();
  return {DensityOperator(chain.space, std::move(m)), tr / incoherent};
}

DensityOperator build_density(const ChainConfig& chain, const DistinguishabilityModel& disting) {
  return build_source(chain, disting).rho;
}

bool coherence_satisfied(const CoherenceGeometry& geom) { return coherence_slack(geom) >= 0.0; }

double coherence_slack(const CoherenceGeometry& geom) {
  return geom.l_coherence - std::abs(geom.l_pump_b - geom.l_pump_a - geom.l_spdc);
}

} // namespace pathid
