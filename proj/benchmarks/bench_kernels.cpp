#include "wlrma/als.hpp"
#include "wlrma/linalg.hpp"
#include "wlrma/prox.hpp"
#include "wlrma/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace wlrma;

namespace {

WeightedProblem instance(Index n, Index p) {
    SimulationSpec spec;
    spec.n = n;
    spec.p = p;
    spec.r = std::min<Index>(p, 20);
    spec.seed = 7;
    return simulate(spec);
}

} // namespace

static void BM_SvdTruncate(benchmark::State &state) {
    const Index n = state.range(0);
    const Matrix x = Matrix::Random(n, n / 10);
    for (auto _ : state)
        benchmark::DoNotOptimize(svd_truncate(x, n / 20));
}
BENCHMARK(BM_SvdTruncate)->Arg(200)->Arg(1000);

static void BM_ProxStep(benchmark::State &state) {
    const WeightedProblem problem = instance(state.range(0), state.range(0) / 10);
    const Formulation f = Formulation::nuclear(30.0);
    Matrix x = Matrix::Zero(problem.rows(), problem.cols());
    for (auto _ : state) {
        x = prox_step(problem, x, f).x;
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_ProxStep)->Arg(200)->Arg(1000);

static void BM_AndersonPush(benchmark::State &state) {
    const Index dim = state.range(0);
    AndersonConfig cfg;
    cfg.depth = 3;
    AndersonState s(dim, cfg);
    const Vector y = Vector::Random(dim);
    const Vector f = Vector::Random(dim);
    for (auto _ : state) {
        s.push(y, f);
        benchmark::DoNotOptimize(s.coefficients());
    }
}
BENCHMARK(BM_AndersonPush)->Arg(100000);

static void BM_AlsStep(benchmark::State &state) {
    const bool sparse = state.range(1) != 0;
    RatingsSpec spec;
    spec.users = state.range(0);
    spec.items = state.range(0) / 2;
    spec.density = 0.05;
    spec.seed = 3;
    WeightedProblem problem = simulate_ratings(spec).to_problem();
    if (!sparse)
        problem = problem.to_dense();
    const Formulation f = Formulation::nuclear(10.0);
    FactorPair factors = random_factors(problem.rows(), problem.cols(), 20, 1);
    for (auto _ : state) {
        factors = als_step(problem, factors, f);
        benchmark::DoNotOptimize(factors.a.data());
    }
}
BENCHMARK(BM_AlsStep)->Args({2000, 0})->Args({2000, 1});

BENCHMARK_MAIN();
