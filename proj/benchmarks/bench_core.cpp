#include <benchmark/benchmark.h>

#include <random>

#include "phaseret/fft.hpp"
#include "phaseret/prox.hpp"
#include "phaseret/sim.hpp"
#include "phaseret/solver.hpp"

using namespace phaseret;

namespace {

Field random_field(Lattice lat, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Field f(lat);
    for (auto& x : f.v) x = cplx(g(rng), g(rng));
    return f;
}

struct NoisyInstance {
    MagnitudeData data;
    SupportMask support;
};

NoisyInstance noisy_instance(int object_side, double ratio) {
    const Phantom p = make_phantom(PhantomKind::vesicle, {object_side, object_side}, 1);
    const Field u0 = oversample(p, ratio, 0).first;
    return {simulate_magnitudes(u0, NoiseSpec{1e8, 0.0, true, 1}, 0.0), tight_support(u0, 0)};
}

}  // namespace

static void BM_dft2(benchmark::State& state) {
    const int n = int(state.range(0));
    const Field u = random_field({n, n}, 42);
    for (auto _ : state) benchmark::DoNotOptimize(dft2(u));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_dft2)->Arg(64)->Arg(128)->Arg(192)->Arg(256)->Arg(512);

// Odd sizes take FFTW's generic codelets; worth tracking separately.
static void BM_dft2_odd(benchmark::State& state) {
    const int n = int(state.range(0));
    const Field u = random_field({n, n}, 42);
    for (auto _ : state) benchmark::DoNotOptimize(dft2(u));
}
BENCHMARK(BM_dft2_odd)->Arg(63)->Arg(127)->Arg(251);

static void BM_prox_magnitude(benchmark::State& state) {
    const int n = int(state.range(0));
    const auto inst = noisy_instance(n / 2, 2.0);
    const Field z = random_field({n, n}, 7);
    const FidelityWeight w{0.1, 1.0, 0.9};
    for (auto _ : state) benchmark::DoNotOptimize(prox_magnitude(z, inst.data, w));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_prox_magnitude)->Arg(128)->Arg(256);

static void BM_proj_object(benchmark::State& state) {
    const int n = int(state.range(0));
    const SupportMask support = rect_support({n, n}, n / 2, n / 2);
    const Field u = random_field({n, n}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(proj_object(u, support));
}
BENCHMARK(BM_proj_object)->Arg(128)->Arg(256);

static void BM_smooth_dual_fourier(benchmark::State& state) {
    const int n = int(state.range(0));
    const RadialMap rmap = radial_map({n, n});
    const Field y = random_field({n, n}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(smooth_dual_fourier(y, rmap, 1e-3, 0.9));
}
BENCHMARK(BM_smooth_dual_fourier)->Arg(128)->Arg(256);

static void BM_smooth_dual_real(benchmark::State& state) {
    const int n = int(state.range(0));
    const Field y = random_field({n, n}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(smooth_dual_real(y, 2.0, 0.9));
}
BENCHMARK(BM_smooth_dual_real)->Arg(128)->Arg(256);

static void BM_gaussian_lowpass_real(benchmark::State& state) {
    const int n = int(state.range(0));
    const Field u = random_field({n, n}, 7);
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_lowpass(u, 8.0, Domain::real));
}
BENCHMARK(BM_gaussian_lowpass_real)->Arg(128)->Arg(256);

// Whole-solver cost per iteration, dominated by the two transforms plus the
// projected-estimate monitoring.
static void BM_solver_iterations(benchmark::State& state) {
    const auto inst = noisy_instance(64, 2.0);
    const Algorithm alg = state.range(0) ? Algorithm::gps_f : Algorithm::hio;
    const int iters = 100;
    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.schedule.stages = 1;
    cfg.schedule.iters_per_stage = iters;
    cfg.seed = 9;
    for (auto _ : state) benchmark::DoNotOptimize(run(inst.data, inst.support, cfg));
    state.SetItemsProcessed(state.iterations() * iters);
    state.SetLabel(algorithm_name(alg));
}
BENCHMARK(BM_solver_iterations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_rf_factor(benchmark::State& state) {
    const auto inst = noisy_instance(64, 2.0);
    const Field z = random_field(inst.data.lattice, 7);
    for (auto _ : state) benchmark::DoNotOptimize(rf_factor(z, inst.data));
}
BENCHMARK(BM_rf_factor);

BENCHMARK_MAIN();
