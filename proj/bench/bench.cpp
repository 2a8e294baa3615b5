// Serial reference kernels against their OpenMP counterparts.
//   ./pathid-bench --benchmark_filter=Poisson
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "pathid/kernels.hpp"
#include "pathid/measurement.hpp"
#include "pathid/source_chain.hpp"
#include "pathid/tomography.hpp"

using namespace pathid;

namespace {

template <auto Kernel>
void BM_Poisson(benchmark::State& state) {
  const std::vector<double> means(static_cast<std::size_t>(state.range(0)), 500.0);
  std::vector<std::int64_t> out(means.size());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Kernel(means, seed++, 0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// A random-ish sigma and one column per setting of a modes.size() design.
struct LikelihoodInput {
  Matrix sigma;
  Matrix vecs;
  std::vector<double> counts;
};

LikelihoodInput likelihood_input(int n_modes) {
  std::vector<int> modes;
  for (int l = 0; l < n_modes; ++l) modes.push_back(2 * l - n_modes + 1);
  const auto design = TomographyDesign::standard(modes, ModeSpace(n_modes));
  LikelihoodInput in;
  in.vecs = design.subspace_vectors();
  const auto d = in.vecs.rows();
  const Matrix a = Matrix::Random(d, d);
  in.sigma = a * a.adjoint();
  in.sigma /= in.sigma.trace().real();
  for (Eigen::Index k = 0; k < in.vecs.cols(); ++k) in.counts.push_back(static_cast<double>(100 + k % 37));
  return in;
}

template <auto Kernel>
void BM_Likelihood(benchmark::State& state) {
  const auto in = likelihood_input(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto terms = Kernel(in.sigma, in.vecs, in.counts);
    benchmark::DoNotOptimize(terms.log_likelihood);
  }
  state.counters["settings"] = static_cast<double>(in.vecs.cols());
}

template <Backend B>
void BM_Bootstrap(benchmark::State& state) {
  const auto k = build_state([] {
    ChainConfig c;
    c.space = ModeSpace(4);
    c.stages.push_back(CrystalSpec{1.0, 0, {1.0}});
    c.stages.push_back(PhaseShifter{0.0});
    c.stages.push_back(PumpModeShifter{4});
    c.stages.push_back(CrystalSpec{1.0, 0, {1.0}});
    return c;
  }());
  const auto design = TomographyDesign::standard({0, 2});
  const auto records = simulate_counts(ket_to_density(k), design, 1e4, 1.0, 1);
  MleOptions mle;
  mle.max_iter = 500;
  for (auto _ : state) {
    auto s = bootstrap_fidelity(records, design, k, static_cast<int>(state.range(0)), 7, mle, B);
    benchmark::DoNotOptimize(s.mean);
  }
}

} // namespace

BENCHMARK(BM_Poisson<kernels::serial::poisson_counts>)->Name("Poisson/serial")->UseRealTime()->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_Poisson<kernels::omp::poisson_counts>)->Name("Poisson/omp")->UseRealTime()->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_Likelihood<kernels::serial::likelihood_terms>)->Name("Likelihood/serial")->UseRealTime()->Arg(3)->Arg(5)->Arg(7);
BENCHMARK(BM_Likelihood<kernels::omp::likelihood_terms>)->Name("Likelihood/omp")->UseRealTime()->Arg(3)->Arg(5)->Arg(7);
BENCHMARK(BM_Bootstrap<Backend::Serial>)->Name("Bootstrap/serial")->UseRealTime()->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<Backend::OpenMP>)->Name("Bootstrap/omp")->UseRealTime()->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
