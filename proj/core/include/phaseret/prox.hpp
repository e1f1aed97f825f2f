#pragma once

#include "phaseret/grid.hpp"

namespace phaseret {

/// Measured Fourier magnitudes b with their data mask. Pixels with
/// measured == 0 are missing (beamstop, panel gaps); b is ignored there.
struct MagnitudeData {
    Lattice lattice;
    std::vector<double> b;
    std::vector<std::uint8_t> measured;

    MagnitudeData() = default;
    MagnitudeData(Lattice lat, std::vector<double> mags, std::vector<std::uint8_t> mask)
        : lattice(lat), b(std::move(mags)), measured(std::move(mask)) {
        if (b.size() != lattice.size() || measured.size() != lattice.size())
            throw std::invalid_argument("MagnitudeData: size mismatch");
        for (double x : b)
            if (!(x >= 0.0))
                throw std::invalid_argument("MagnitudeData: magnitudes must be >= 0");
    }
};

/// Fidelity relaxation weight sigma plus the primal/dual step sizes.
/// sigma = 0 turns the magnitude prox into the exact projection.
struct FidelityWeight {
    double sigma = 0.0;
    double t = 1.0;
    double s = 0.9;

    FidelityWeight() = default;
    FidelityWeight(double sigma_, double t_, double s_) : sigma(sigma_), t(t_), s(s_) {
        if (!(t > 0.0) || !(s > 0.0) || !(sigma >= 0.0))
            throw std::invalid_argument("FidelityWeight: need t > 0, s > 0, sigma >= 0");
    }
};

/// Unit-modulus phase factor per pixel; zero maps to 1 so downstream
/// projections stay deterministic.
Field phase(const Field& z);

/// Proximal step toward the magnitude data: on measured pixels
///   (b o phase(z) + (sigma/t) z) / (1 + sigma/t),
/// a linear interpolation between z and its magnitude projection; missing
/// pixels pass through unchanged.
Field prox_magnitude(const Field& z, const MagnitudeData& data, const FidelityWeight& w);

/// Projection onto the dual support constraint {Re(y) <= 0 on S}:
/// inside S the real part is clamped to min(0, Re); outside S unchanged.
Field proj_support_dual(const Field& y, const SupportMask& support);

/// Projection onto the object constraint: nonnegative real part inside S,
/// zero outside. Output is real-valued (imaginary part exactly zero).
Field proj_object(const Field& u, const SupportMask& support);

enum class RealSmoothBackend {
    heat_kernel,    // frequency multiplier of a variance-2*gamma Gaussian
    backward_euler  // (I + s*gamma*DtD)^-1 with the five-point circular Laplacian
};

/// Gaussian smoothing of the dual variable in real space. The heat_kernel
/// backend convolves with the heat kernel at time gamma (pixel-unit variance
/// 2*gamma), realized as multiplication by exp(-4 pi^2 gamma |xi|^2) at the
/// discrete frequency xi = (sa/n1, sb/n2). The backward_euler backend divides
/// by (1 + s*gamma*lambda) with lambda the five-point Laplacian eigenvalues;
/// the two agree to first order in the smoothing strength. gamma = 0 is the
/// identity.
Field smooth_dual_real(const Field& y, double gamma, double s,
                       RealSmoothBackend backend = RealSmoothBackend::heat_kernel);

enum class FourierSmoothForm {
    gaussian,  // exp(-s*gamma*r^2), one-step heat flow
    exact      // 1 / (1 + s*gamma*r^2), the exact diagonal prox
};

/// Pixelwise damping of the dual variable by a Gaussian envelope in the
/// radial distance r: the center is untouched, far pixels are shrunk.
Field smooth_dual_fourier(const Field& y, const RadialMap& rmap, double gamma, double s,
                          FourierSmoothForm form = FourierSmoothForm::gaussian);

}  // namespace phaseret
