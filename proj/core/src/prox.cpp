#include "phaseret/prox.hpp"

#include <cmath>

#include "phaseret/fft.hpp"

namespace phaseret {

namespace {
void check_lattice(const Lattice& a, const Lattice& b, const char* who) {
    if (a != b) throw std::invalid_argument(std::string(who) + ": lattice mismatch");
}

inline cplx unit_phase(cplx z) {
    const double m = std::abs(z);
    return m == 0.0 ? cplx(1.0, 0.0) : z / m;
}
}  // namespace

Field phase(const Field& z) {
    Field out(z.lattice);
    for (std::size_t i = 0; i < z.size(); ++i) out.v[i] = unit_phase(z.v[i]);
    return out;
}

Field prox_magnitude(const Field& z, const MagnitudeData& data, const FidelityWeight& w) {
    check_lattice(z.lattice, data.lattice, "prox_magnitude");
    Field out(z.lattice);
    const double rho = w.sigma / w.t;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!data.measured[i]) {
            out.v[i] = z.v[i];
        } else if (rho == 0.0) {
            out.v[i] = data.b[i] * unit_phase(z.v[i]);
        } else {
            out.v[i] = (data.b[i] * unit_phase(z.v[i]) + rho * z.v[i]) / (1.0 + rho);
        }
    }
    return out;
}

Field proj_support_dual(const Field& y, const SupportMask& support) {
    check_lattice(y.lattice, support.lattice, "proj_support_dual");
    Field out = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (support.inside[i] && out.v[i].real() > 0.0)
            out.v[i] = cplx(0.0, out.v[i].imag());
    }
    return out;
}

Field proj_object(const Field& u, const SupportMask& support) {
    check_lattice(u.lattice, support.lattice, "proj_object");
    Field out(u.lattice);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double re = u.v[i].real();
        out.v[i] = (support.inside[i] && re > 0.0) ? cplx(re, 0.0) : cplx(0.0, 0.0);
    }
    return out;
}

Field smooth_dual_real(const Field& y, double gamma, double s, RealSmoothBackend backend) {
    if (gamma < 0.0) throw std::invalid_argument("smooth_dual_real: gamma must be >= 0");
    if (gamma == 0.0) return y;

    const Lattice lat = y.lattice;
    Field spec = dft2(y);
    constexpr double pi = 3.14159265358979323846;
    for (int a = 0; a < lat.n1; ++a) {
        const double fa = double(signed_freq(a, lat.n1)) / lat.n1;
        for (int b = 0; b < lat.n2; ++b) {
            const double fb = double(signed_freq(b, lat.n2)) / lat.n2;
            double m;
            if (backend == RealSmoothBackend::heat_kernel) {
                m = std::exp(-4.0 * pi * pi * gamma * (fa * fa + fb * fb));
            } else {
                const double sa = std::sin(pi * fa), sb = std::sin(pi * fb);
                const double lap = 4.0 * (sa * sa + sb * sb);
                m = 1.0 / (1.0 + s * gamma * lap);
            }
            spec.v[lat.at(a, b)] *= m;
        }
    }
    return idft2(spec);
}

Field smooth_dual_fourier(const Field& y, const RadialMap& rmap, double gamma, double s,
                          FourierSmoothForm form) {
    check_lattice(y.lattice, rmap.lattice, "smooth_dual_fourier");
    if (gamma < 0.0) throw std::invalid_argument("smooth_dual_fourier: gamma must be >= 0");
    Field out(y.lattice);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double sr2 = s * gamma * rmap.r[i] * rmap.r[i];
        const double m = (form == FourierSmoothForm::gaussian) ? std::exp(-sr2)
                                                               : 1.0 / (1.0 + sr2);
        out.v[i] = y.v[i] * m;
    }
    return out;
}

}  // namespace phaseret
