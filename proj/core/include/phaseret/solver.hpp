#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "phaseret/prox.hpp"

namespace phaseret {

enum class Algorithm { er, hio, oss, gps_r, gps_f, gps_rf };

Algorithm algorithm_from_name(const std::string& name);  // "gps-f", "hio", ...
std::string algorithm_name(Algorithm a);

struct SigmaBreakpoint {
    int start_iteration = 0;
    double sigma = 0.0;
};

/// Stage plan: per-stage filter parameters plus the piecewise-constant sigma
/// schedule. The filter list is a low-pass cutoff alpha (frequency pixels) for
/// GPS-R and OSS, and a radial weight gamma for GPS-F. Empty lists mean
/// "fill in the documented defaults for this algorithm and lattice".
struct Schedule {
    int stages = 10;
    int iters_per_stage = 100;
    std::vector<double> filter_per_stage;        // alpha (R/OSS) or gamma (F)
    std::vector<double> alpha_per_stage;         // real-space cutoffs for GPS-RF
    std::vector<SigmaBreakpoint> sigma_breakpoints;

    int total_iterations() const { return stages * iters_per_stage; }
};

/// Piecewise-constant sigma lookup: the sigma of the last breakpoint whose
/// start_iteration is <= iteration.
double sigma_at(const Schedule& schedule, int iteration);

struct SolverConfig {
    Algorithm algorithm = Algorithm::gps_f;
    double s = 0.9;
    double t = 1.0;
    double beta = 0.9;  // HIO/OSS feedback
    Schedule schedule;
    std::uint64_t seed = 0;
};

/// Outcome of one seeded reconstruction. best_rf is the smallest monitored
/// R_F (misfit of the support-projected estimate); best_iterate is the
/// solver's Fourier-domain iterate at that moment and final_image its
/// inverse DFT, reported as the algorithm produces it (no projection).
struct RunRecord {
    std::vector<double> rf_trace;
    double best_rf = 0.0;
    Field best_iterate;
    Field final_image;
    int iterations_run = 0;
    SolverConfig config_echo;  // schedule lists resolved to concrete values
};

/// Thrown when an iterate goes non-finite; carries the offending iteration.
struct DivergenceError : std::runtime_error {
    int iteration;
    explicit DivergenceError(int iter)
        : std::runtime_error("solver diverged at iteration " + std::to_string(iter)),
          iteration(iter) {}
};

/// Relative l1 magnitude misfit sum(| |z| - b |) / sum(b), measured pixels
/// only. Throws on all-zero measured data.
double rf_factor(const Field& z, const MagnitudeData& data);

/// Per-iteration observation hook. `monitor` is the Fourier-domain point whose
/// magnitude misfit is the recorded rf (the spectrum of the support-projected
/// image estimate); `primal` is the post-update iterate the best-tracking
/// stores; `tentative` is the point this iteration's magnitude update acted on
/// (GPS: z - t*F(y) entering the prox; baselines: the raw iterate's spectrum);
/// `state` is the remaining internal state (GPS: the dual y after smoothing;
/// baselines: the real-space driver). References are valid during the
/// callback only.
struct IterEvent {
    int iteration = 0;  // global, 0-based
    int stage = 0;
    double sigma = 0.0;
    double filter = 0.0;
    double rf = 0.0;
    const Field& tentative;  // GPS: z - t*F(y) entering the prox; baselines: driver spectrum
    const Field& primal;     // GPS: z after the prox; baselines: spectrum after the magnitude step
    const Field& state;      // GPS: smoothed dual y; baselines: real-space driver u
    const Field& monitor;    // spectrum of the support-projected estimate behind `rf`
};
using IterObserver = std::function<void(const IterEvent&)>;

enum class GpsVariant { real, fourier, real_fourier };

/// The primal-dual iteration with dual smoothing in real space (variant
/// real), Fourier space (fourier), or both (real_fourier). `init` optionally
/// replaces the seeded random-phase start with dft2 of the given real-space
/// field. Restarts each stage from the best state seen so far.
RunRecord run_gps(const MagnitudeData& data, const SupportMask& support,
                  const SolverConfig& config, GpsVariant variant,
                  const Field* init = nullptr, const IterObserver& observer = {});

/// ER / HIO / OSS alternating-projection baselines under the same RunRecord
/// contract and best-iterate bookkeeping as run_gps.
RunRecord run_baseline(const MagnitudeData& data, const SupportMask& support,
                       const SolverConfig& config, const Field* init = nullptr,
                       const IterObserver& observer = {});

/// Dispatch on config.algorithm.
RunRecord run(const MagnitudeData& data, const SupportMask& support,
              const SolverConfig& config, const Field* init = nullptr,
              const IterObserver& observer = {});

/// Concrete per-stage filter values and sigma breakpoints for this algorithm
/// and lattice (the values run_* would use); validates user-provided lists.
Schedule resolve_schedule(const Schedule& schedule, Algorithm algorithm, Lattice lattice,
                          double s);

}  // namespace phaseret
