#include <benchmark/benchmark.h>

#include "viana/maps.hpp"
#include "viana/orbit.hpp"
#include "viana/rng.hpp"
#include "viana/stats.hpp"
#include "viana/ulam.hpp"

using namespace viana;

namespace {
const SkewProductSpec& f1() {
    static const SkewProductSpec s = default_f1();
    return s;
}
const SkewProductSpec& f2() {
    static const SkewProductSpec s = default_f2();
    return s;
}
}  // namespace

static void BM_ApplyF1(benchmark::State& state) {
    PhasePoint y{0.37, 0.51};
    for (auto _ : state) {
        y = apply(f1(), y);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(BM_ApplyF1);

static void BM_ApplyF2(benchmark::State& state) {
    PhasePoint y{0.37, 0.51};
    for (auto _ : state) {
        y = apply(f2(), y);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(BM_ApplyF2);

static void BM_StepperF1(benchmark::State& state) {
    OrbitStepper st(f1(), {0.37, 0.51});
    for (auto _ : state) {
        st.advance();
        benchmark::DoNotOptimize(st.point());
    }
}
BENCHMARK(BM_StepperF1);

static void BM_JacobianLogsF1(benchmark::State& state) {
    const PhasePoint y{0.37, 0.51};
    for (auto _ : state) {
        benchmark::DoNotOptimize(jacobian_logs(f1(), y));
    }
}
BENCHMARK(BM_JacobianLogsF1);

static void BM_TimeFunctions(benchmark::State& state) {
    const long horizon = state.range(0);
    Rng rng = stream_rng(1, kTagTail, 0);
    const PhasePoint y{rng.uniform(0, 1), rng.uniform(f1().fiber.lo, f1().fiber.hi)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(time_functions(f1(), y, 0.22, 0.11, 0.006, horizon));
    }
    state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_TimeFunctions)->Arg(400)->Arg(10000);

static void BM_BuildUlamBeta(benchmark::State& state) {
    const long n = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_ulam_base(beta_base(1.8), n));
    }
}
BENCHMARK(BM_BuildUlamBeta)->Arg(1024)->Arg(4096);

static void BM_StationaryDensity(benchmark::State& state) {
    const UlamOperator op = build_ulam_base(beta_base(1.8), state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(stationary_density(op));
    }
}
BENCHMARK(BM_StationaryDensity)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
