#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phaseret/prox.hpp"

namespace phaseret {

/// Ground-truth object density on its own (small) lattice.
struct Phantom {
    Lattice lattice{16, 16};
    std::vector<double> density;  // >= 0, strictly positive somewhere
    std::string name;

    Phantom() = default;
    Phantom(Lattice lat, std::vector<double> d, std::string n);
};

enum class PhantomKind { vesicle, disks };

PhantomKind phantom_kind_from_name(const std::string& name);

/// Seeded generators: "vesicle" is a deformed membrane shell with interior
/// granules, "disks" a handful of soft disks. Densities land in [0, 1] with
/// max 1 and are deliberately non-centrosymmetric (symmetric objects leave the
/// twin image feasible and stall every reconstruction algorithm).
Phantom make_phantom(PhantomKind kind, Lattice object_size, std::uint64_t seed);

/// Wraps externally supplied values (custom-file path); negatives clamp to 0.
Phantom phantom_from_values(Lattice lat, std::vector<double> values, std::string name);

/// Zero-pads the phantom centered into `big` (same placement as rect_support).
Field embed_density(const Phantom& p, Lattice big);

/// Centered zero-padding to a ceil(ratio*n) lattice plus the matching support
/// rectangle, optionally dilated by `margin` pixels on each side.
std::pair<Field, SupportMask> oversample(const Phantom& p, double ratio, int margin = 0);

/// Mask of the strictly positive pixels of a real density, optionally dilated
/// by `margin` pixels (Chebyshev balls, clipped at the lattice edge). This is
/// the support the simulator hands to reconstruction: a bounding rectangle is
/// far looser than the object and in practice too weak a constraint.
SupportMask tight_support(const Field& u, int margin = 0);

struct NoiseSpec {
    double flux = 0.0;           // total photon count across the pattern
    double readout_sigma = 0.0;  // Gaussian readout std, intensity units
    bool poisson_enabled = false;
    std::uint64_t seed = 0;
};

/// Far-field magnitudes of u0 under photon + readout noise. Intensities are
/// scaled so the whole pattern carries `flux` expected counts, per-pixel
/// Poisson counts are drawn, Gaussian readout is added, negatives clamp to
/// zero, and the square root is scaled back to the units of |dft2(u0)| (so the
/// no-noise path returns |dft2(u0)| bit for bit). Pixels with centered
/// frequency radius < beamstop_radius are marked non-measured with b = 0.
MagnitudeData simulate_magnitudes(const Field& u0, const NoiseSpec& noise,
                                  double beamstop_radius = 0.0);

/// sum(|b - |F u0||) / sum(|F u0|) over measured pixels.
double r_noise(const MagnitudeData& data, const Field& u0);

struct FluxCalibration {
    double flux = 0.0;
    double achieved_r_noise = 0.0;
    bool within_band = false;  // achieved within +-10% of the target
};

/// Bisects log10(flux) over [2, 14] (12 steps, median r_noise of 5 seeds) so
/// the noise level lands near target_r_noise. Reports the achieved level even
/// when the target is unreachable (e.g. readout-dominated).
FluxCalibration calibrate_flux(const Field& u0, double readout_sigma,
                               double target_r_noise, double beamstop_radius = 0.0,
                               std::uint64_t seed = 0);

}  // namespace phaseret
