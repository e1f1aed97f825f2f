#include "phaseret/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace phaseret {

double r_real(const Field& recon, const Phantom& truth) {
    if (truth.lattice.n1 > recon.lattice.n1 || truth.lattice.n2 > recon.lattice.n2)
        throw std::invalid_argument("r_real: truth exceeds reconstruction lattice");

    const Field ref = embed_density(truth, recon.lattice);
    double den = 0.0;
    for (double v : truth.density) den += v;

    const int n1 = recon.lattice.n1, n2 = recon.lattice.n2;
    double best = std::numeric_limits<double>::infinity();
    for (int twin = 0; twin < 2; ++twin) {
        for (int da = -2; da <= 2; ++da) {
            for (int db = -2; db <= 2; ++db) {
                double err = 0.0;
                for (int i = 0; i < n1; ++i) {
                    for (int j = 0; j < n2; ++j) {
                        int si = i - da, sj = j - db;
                        if (twin) {
                            si = -si;
                            sj = -sj;
                        }
                        si = ((si % n1) + n1) % n1;
                        sj = ((sj % n2) + n2) % n2;
                        err += std::abs(recon.v[recon.lattice.at(si, sj)].real() -
                                        ref.v[ref.lattice.at(i, j)].real());
                    }
                }
                best = std::min(best, err / den);
            }
        }
    }
    return best;
}

double r_real(const Field& recon, const Phantom& truth, const SupportMask& support) {
    if (recon.lattice != support.lattice)
        throw std::invalid_argument("r_real: support lattice mismatch");
    return r_real(recon, truth);
}

double residual(const Field& z_or_u, const MagnitudeData& data, Domain domain) {
    if (z_or_u.lattice != data.lattice)
        throw std::invalid_argument("residual: lattice mismatch");
    Field transformed;
    const Field* z = &z_or_u;
    if (domain == Domain::real) {
        transformed = dft2(z_or_u);
        z = &transformed;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < z->size(); ++i) {
        if (!data.measured[i]) continue;
        const double diff = std::abs(z->v[i]) - data.b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

namespace {

Histogram fd_histogram(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    Histogram h;
    h.lo = values.front();
    const double span = values.back() - values.front();
    const double iqr =
        values[(3 * (n - 1)) / 4] - values[(n - 1) / 4];
    const double width = 2.0 * iqr / std::cbrt(double(n));
    if (span <= 0.0 || width <= 0.0) {
        h.bin_width = 0.0;
        h.counts = {int(n)};
        return h;
    }
    const int bins = std::max(1, int(std::ceil(span / width)));
    h.bin_width = width;
    h.counts.assign(bins, 0);
    for (double v : values) {
        const int idx = std::min(bins - 1, int((v - h.lo) / width));
        ++h.counts[idx];
    }
    return h;
}

}  // namespace

BatchSummary aggregate(const std::vector<RunRecord>& runs, const Phantom* truth, int k,
                       const MagnitudeData* data) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    if (k < 1 || k > int(runs.size()))
        throw std::invalid_argument("aggregate: k out of range");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    BatchSummary out;
    out.k = k;
    out.per_run.reserve(runs.size());
    for (const RunRecord& r : runs) {
        RunStat st;
        st.seed = r.config_echo.seed;
        st.best_rf = r.best_rf;
        st.r_real = truth ? r_real(r.final_image, *truth) : nan;
        st.residual = data ? residual(r.best_iterate, *data, Domain::fourier) : nan;
        out.per_run.push_back(st);
    }

    out.best_run = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].best_rf < runs[out.best_run].best_rf) out.best_run = int(i);
    out.best_trace = runs[out.best_run].rf_trace;

    std::vector<double> rf(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) rf[i] = runs[i].best_rf;
    out.rf_histogram = fd_histogram(rf);

    std::vector<double> sorted = rf;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (int i = 0; i < k; ++i) mean += sorted[i];
    mean /= k;
    double var = 0.0;
    for (int i = 0; i < k; ++i) var += (sorted[i] - mean) * (sorted[i] - mean);
    out.rf_mean_topk = mean;
    out.rf_std_topk = std::sqrt(var / k);
    return out;
}

}  // namespace phaseret
