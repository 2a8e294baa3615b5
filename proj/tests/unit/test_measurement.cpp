#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pathid/measurement.hpp"
#include "chains.hpp"
#include "oracles.hpp"

using namespace pathid;
using std::numbers::pi;

namespace {

DensityOperator pure(const BiphotonKet& k) { return ket_to_density(normalize(k)); }

BiphotonKet phi_plus() { return normalize(BiphotonKet(ModeSpace(4), {{{0, 0}, 1.0}, {{2, 2}, 1.0}})); }

std::vector<FringeSample> synthetic(double amp, double v, double phi0, int n, double span = 2 * pi) {
  std::vector<FringeSample> f;
  for (int k = 0; k < n; ++k) {
    const double phi = span * k / n;
    f.push_back({phi, amp * (1.0 + v * std::cos(phi + phi0))});
  }
  return f;
}

}  // namespace

TEST_CASE("standard design") {
  for (int d : {1, 2, 3, 4}) {
    std::vector<int> modes;
    for (int i = 0; i < d; ++i) modes.push_back(2 * i - 2);
    const auto design = TomographyDesign::standard(modes);
    CHECK(design.size() == static_cast<std::size_t>(d * d * d * d));
    CHECK(design.subspace_dim() == d * d);
    CHECK(design.informationally_complete());
    CHECK_NOTHROW(design.require_complete());
    for (const auto& s : design.settings()) CHECK_NOTHROW(validate_setting(s));
  }
  const auto d3 = TomographyDesign::standard({-2, 0, 2});
  CHECK(d3.signal_modes() == std::vector<int>{-2, 0, 2});
  CHECK(d3.subspace_basis().front() == OamPair{-2, -2});
  CHECK(d3.subspace_basis().back() == OamPair{2, 2});
}

TEST_CASE("incomplete designs are detected") {
  std::vector<MeasurementSetting> basis_only;
  for (int s : {0, 2}) {
    for (int i : {0, 2}) basis_only.push_back({ModeKet::basis(s), ModeKet::basis(i)});
  }
  const TomographyDesign design(ModeSpace(4), basis_only);
  CHECK(design.measurement_rank() == 4);
  CHECK_FALSE(design.informationally_complete());
  CHECK_THROWS_AS(design.require_complete(), CompletenessError);
  CHECK_THROWS_AS(TomographyDesign(ModeSpace(4), {}), CompletenessError);
  CHECK_THROWS_AS(TomographyDesign(ModeSpace(1), {{ModeKet::basis(2), ModeKet::basis(0)}}), DimensionError);
}

TEST_CASE("measurement rank matches an independent rank computation") {
  const auto design = TomographyDesign::standard({0, 2});
  const Matrix vecs = design.subspace_vectors();
  const Eigen::Index n = vecs.rows();
  Matrix a(vecs.cols(), n * n);
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) a(k, i * n + j) = std::conj(vecs(i, k)) * vecs(j, k);
    }
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-9;
  CHECK(rank == 16);
  CHECK(design.measurement_rank() == rank);
}

TEST_CASE("simulate_counts") {
  const auto design = TomographyDesign::standard({0, 2});
  SUBCASE("zero probability gives zero counts") {
    const auto rho = pure(BiphotonKet(ModeSpace(4), {{{0, 0}, 1.0}}));
    const TomographyDesign one(ModeSpace(4), {{ModeKet::basis(2), ModeKet::basis(2)}});
    for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(simulate_counts(rho, one, 1e6, 1.0, seed)[0].counts == 0);
  }
  SUBCASE("deterministic per seed, serial equals parallel") {
    const auto rho = ket_to_density(phi_plus());
    const auto a = simulate_counts(rho, design, 1e4, 1.0, 42, Backend::Serial);
    const auto b = simulate_counts(rho, design, 1e4, 1.0, 42, Backend::OpenMP);
    const auto c = simulate_counts(rho, design, 1e4, 1.0, 42);
    const auto d = simulate_counts(rho, design, 1e4, 1.0, 43);
    CHECK(a == b);
    CHECK(a == c);
    CHECK_FALSE(a == d);
    for (const auto& r : a) {
      CHECK(r.counts >= 0);
      CHECK(r.rate_scale == 1e4);
      CHECK(r.integration_time == 1.0);
    }
  }
  SUBCASE("bell projection mean") {
    const auto rho = ket_to_density(phi_plus());
    const TomographyDesign one(ModeSpace(4), {{ModeKet::basis(0), ModeKet::basis(0)}});
    double sum = 0.0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) sum += static_cast<double>(simulate_counts(rho, one, 1000.0, 1.0, s)[0].counts);
    const double mean = sum / seeds;
    CHECK(std::abs(mean - 500.0) < 5.0 * std::sqrt(500.0 / seeds));
  }
  SUBCASE("argument checks") {
    const auto rho = ket_to_density(phi_plus());
    CHECK_THROWS_AS(simulate_counts(rho, design, 0.0, 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(simulate_counts(rho, design, 1.0, -1.0, 1), ArgumentError);
    const auto small = ket_to_density(BiphotonKet(ModeSpace(2), {{{0, 0}, 1.0}}));
    CHECK_THROWS_AS(simulate_counts(small, design, 1.0, 1.0, 1), DimensionError);
  }
}

TEST_CASE("simulated means converge for random states and settings") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  const int L = 2;
  const int seeds = 10000;
  for (int pair = 0; pair < 20; ++pair) {
    const DensityOperator rho(ModeSpace(L), oracle::random_density(oracle::joint_dim(L), 1 + pair % 4, gen));
    std::map<int, Complex> a, b;
    for (int l = -L; l <= L; ++l) {
      a[l] = Complex(n(gen), n(gen));
      b[l] = Complex(n(gen), n(gen));
    }
    const oracle::Vec va = oracle::normalized(oracle::photon(L, a));
    const oracle::Vec vb = oracle::normalized(oracle::photon(L, b));
    for (int l = -L; l <= L; ++l) {
      a[l] = va(l + L);
      b[l] = vb(l + L);
    }
    const double p = oracle::expectation(rho.matrix(), oracle::kron(va, vb));
    const double rate = 200.0, time = 1.5;
    const TomographyDesign one(ModeSpace(L), {{ModeKet(a), ModeKet(b)}});
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) sum += static_cast<double>(simulate_counts(rho, one, rate, time, s)[0].counts);
    const double mu = rate * time * p;
    CHECK(std::abs(sum / seeds - mu) <= 5.0 * std::sqrt(std::max(mu, 1e-12) / seeds));
  }
}

TEST_CASE("expected counts are rounded means") {
  const auto rho = ket_to_density(phi_plus());
  const auto design = TomographyDesign::standard({0, 2});
  const auto rec = expected_counts(rho, design, 1000.0, 2.0);
  REQUIRE(rec.size() == design.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const double p = oracle::expectation(rho.matrix(), setting_vector(ModeSpace(4), design.settings()[k]));
    CHECK(rec[k].counts == std::llround(2000.0 * p));
  }
}

TEST_CASE("visibility fit") {
  SUBCASE("full contrast") {
    const auto fit = visibility(synthetic(100, 1.0, 0.0, 16));
    CHECK(std::abs(fit.visibility - 1.0) < 1e-9);
    CHECK(std::abs(fit.amplitude - 100.0) < 1e-9);
  }
  SUBCASE("recovers the generating parameters") {
    for (double v : {0.0, 0.1, 0.5, 0.971, 1.0}) {
      for (double phi0 : {0.0, 0.4, -2.0, 3.0}) {
        const auto fit = visibility(synthetic(250, v, phi0, 12));
        CHECK(std::abs(fit.visibility - v) < 1e-6);
        CHECK(std::abs(fit.amplitude - 250.0) < 1e-6);
        if (v > 0.0) CHECK(std::abs(std::remainder(fit.phase_offset - phi0, 2 * pi)) < 1e-6);
      }
    }
  }
  SUBCASE("agrees with the linear least-squares oracle on noisy data") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 50; ++trial) {
      auto f = synthetic(500, 0.8, 0.3 * trial, 20);
      std::vector<double> phi, y;
      for (auto& s : f) {
        std::poisson_distribution<long> p(s.counts);
        s.counts = static_cast<double>(p(gen));
        phi.push_back(s.phi);
        y.push_back(s.counts);
      }
      const auto fit = visibility(f);
      const auto [a, v] = oracle::linear_fringe_fit(phi, y);
      CHECK(std::abs(fit.visibility - v) < 1e-8);
      CHECK(std::abs(fit.amplitude - a) < 1e-6);
      CHECK(fit.visibility_err > 0.0);
    }
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(visibility(synthetic(100, 0.5, 0.0, 7)), ArgumentError);
    CHECK_THROWS_AS(visibility(synthetic(100, 0.5, 0.0, 16, pi)), ArgumentError);
    CHECK_THROWS_AS(visibility(synthetic(0, 0.5, 0.0, 16)), FitError);
    CHECK_THROWS_AS(visibility(synthetic(-5, 0.5, 0.0, 16)), FitError);
  }
}

TEST_CASE("noiseless phase scan recovers the overlap") {
  const auto chain = fixtures::two_crystal(0.0);
  const MeasurementSetting s{ModeKet::superposition(0, 1, 0.0), ModeKet::superposition(0, 1, 0.0)};
  std::vector<double> phis;
  for (int k = 0; k < 24; ++k) phis.push_back(2 * pi * k / 24);
  for (double g : {0.0, 0.25, 0.5, 0.75, 0.971, 1.0}) {
    const auto fringe = phase_scan(chain, DistinguishabilityModel::uniform(2, g), 2, s, phis, 1000.0, 1.0, 0, true);
    CHECK(std::abs(visibility(fringe).visibility - g) <= 1e-6);
  }
  CHECK_THROWS_AS(phase_scan(chain, DistinguishabilityModel::coherent(2), 1, s, phis, 1.0, 1.0, 0, true), ArgumentError);
}

TEST_CASE("identical-mode crystals interfere in the rate") {
  ChainConfig same{{CrystalSpec{}, PhaseShifter{0.0}, CrystalSpec{}}, ModeSpace(2)};
  const MeasurementSetting s{ModeKet::basis(0), ModeKet::basis(0)};
  std::vector<double> phis;
  for (int k = 0; k < 16; ++k) phis.push_back(2 * pi * k / 16);
  const auto fringe = phase_scan(same, DistinguishabilityModel::uniform(2, 0.6), 1, s, phis, 100.0, 1.0, 0, true);
  for (const auto& p : fringe) CHECK(p.counts == doctest::Approx(100.0 * (1.0 + 0.6 * std::cos(p.phi))));
  CHECK(visibility(fringe).visibility == doctest::Approx(0.6));
}

TEST_CASE("crosstalk matrix") {
  SUBCASE("fundamental mode only") {
    const auto m = crosstalk_matrix(pure(BiphotonKet(ModeSpace(4), {{{0, 0}, 1.0}})), {-2, -1, 0, 1, 2});
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) CHECK(m(i, j) == (i == 2 && j == 2 ? 1.0 : 0.0));
    }
    CHECK(std::isinf(dominance_ratio(m)));
  }
  SUBCASE("bell pair has two equal diagonal peaks") {
    const auto m = crosstalk_matrix(ket_to_density(phi_plus()), {0, 1, 2});
    CHECK(m(0, 0) == doctest::Approx(1.0));
    CHECK(m(2, 2) == doctest::Approx(1.0));
    CHECK(m.sum() == doctest::Approx(2.0));
    CHECK(dominance_ratio(m) == doctest::Approx(1.0));
  }
  SUBCASE("weak first-order admixture") {
    const auto k = crystal_emission(CrystalSpec{1.0, 0, {1.0, std::sqrt(0.05)}});
    const auto m = crosstalk_matrix(ket_to_density(k), {-2, -1, 0, 1, 2});
    CHECK(m(2, 2) == 1.0);
    CHECK(m(1, 3) == doctest::Approx(0.05));
    CHECK(m(3, 1) == doctest::Approx(0.05));
    CHECK(dominance_ratio(m) == doctest::Approx(20.0));
  }
}
