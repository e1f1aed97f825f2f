#pragma once

#include <cstdint>
#include <vector>

#include "phaseret/fft.hpp"
#include "phaseret/sim.hpp"
#include "phaseret/solver.hpp"

namespace phaseret {

/// Relative l1 error against the embedded truth, minimized over the phase
/// retrieval ambiguities: circular translations within +-2 pixels and the
/// 180-degree twin. Real parts, full lattice.
double r_real(const Field& recon, const Phantom& truth);

/// Same metric; `support` locates nothing and is only validated against the
/// lattice for interface consistency.
double r_real(const Field& recon, const Phantom& truth, const SupportMask& support);

/// l2 magnitude misfit ||  |F u| - b  || over measured pixels. Real-domain
/// input is transformed first.
double residual(const Field& z_or_u, const MagnitudeData& data, Domain domain);

struct RunStat {
    std::uint64_t seed = 0;
    double best_rf = 0.0;
    double r_real = 0.0;    // NaN when no truth is available
    double residual = 0.0;  // NaN when no measurement data is available
};

struct Histogram {
    double lo = 0.0;
    double bin_width = 0.0;  // 0 when all values coincide (single bin)
    std::vector<int> counts;
};

struct BatchSummary {
    std::vector<RunStat> per_run;  // input order
    Histogram rf_histogram;        // over best_rf, Freedman-Diaconis bins
    double rf_mean_topk = 0.0;
    double rf_std_topk = 0.0;
    int k = 0;
    int best_run = 0;  // index of the smallest best_rf (first on ties)
    std::vector<double> best_trace;
};

/// Reduces a multi-seed study: top-k mean/std of best_rf (the best-5-of-500
/// convention), histogram, per-run quality, and the best run's trace. Truth
/// and data are optional; metrics needing them come back NaN.
BatchSummary aggregate(const std::vector<RunRecord>& runs, const Phantom* truth, int k,
                       const MagnitudeData* data = nullptr);

}  // namespace phaseret
