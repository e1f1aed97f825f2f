#include "phaseret/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace phaseret {

namespace {

// FFTW plan creation is not thread-safe; execution via fftw_execute_dft is.
// Plans are cached per lattice size, created with FFTW_ESTIMATE so planning
// is deterministic, and FFTW_UNALIGNED so they run on any caller buffer.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::map<std::pair<int, int>, PlanPair>& plan_cache() {
    static std::map<std::pair<int, int>, PlanPair> cache;
    return cache;
}

PlanPair plans_for(Lattice lat) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find({lat.n1, lat.n2});
    if (it != cache.end()) return it->second;

    std::vector<cplx> a(lat.size()), b(lat.size());
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    PlanPair p;
    p.fwd = fftw_plan_dft_2d(lat.n1, lat.n2, pa, pb, FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_2d(lat.n1, lat.n2, pa, pb, FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[{lat.n1, lat.n2}] = p;
    return p;
}

Field transform(const Field& in, bool forward) {
    PlanPair p = plans_for(in.lattice);
    Field out(in.lattice);
    // out-of-place c2c execute does not touch the input buffer
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.v.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.v.data());
    fftw_execute_dft(forward ? p.fwd : p.bwd, src, dst);
    const double scale = 1.0 / std::sqrt(double(in.lattice.size()));
    for (auto& z : out.v) z *= scale;
    return out;
}

}  // namespace

Field dft2(const Field& u) { return transform(u, true); }

Field idft2(const Field& z) { return transform(z, false); }

Field gaussian_lowpass(const Field& z, double alpha, Domain domain) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("gaussian_lowpass: alpha must be positive");
    if (domain == Domain::real)
        return idft2(gaussian_lowpass(dft2(z), alpha, Domain::fourier));

    const Lattice lat = z.lattice;
    Field out(lat);
    const double inv2a2 = 1.0 / (2.0 * alpha * alpha);
    for (int a = 0; a < lat.n1; ++a) {
        const double fa = signed_freq(a, lat.n1);
        for (int b = 0; b < lat.n2; ++b) {
            const double fb = signed_freq(b, lat.n2);
            const double k2 = fa * fa + fb * fb;
            out.v[lat.at(a, b)] = z.v[lat.at(a, b)] * std::exp(-k2 * inv2a2);
        }
    }
    return out;
}

Field spectral_derivative(const Field& z, int axis) {
    if (axis != 0 && axis != 1)
        throw std::invalid_argument("spectral_derivative: axis must be 0 or 1");
    const Lattice lat = z.lattice;
    Field u = idft2(z);
    const int ci = lat.center_row(), cj = lat.center_col();
    for (int i = 0; i < lat.n1; ++i) {
        for (int j = 0; j < lat.n2; ++j) {
            const double xc = (axis == 0) ? double(i - ci) : double(j - cj);
            u.v[lat.at(i, j)] *= cplx(0.0, -xc);
        }
    }
    return dft2(u);
}

}  // namespace phaseret
