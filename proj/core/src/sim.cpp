#include "phaseret/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "phaseret/fft.hpp"

namespace phaseret {

Phantom::Phantom(Lattice lat, std::vector<double> d, std::string n)
    : lattice(lat), density(std::move(d)), name(std::move(n)) {
    if (density.size() != static_cast<std::size_t>(lattice.size()))
        throw std::invalid_argument("Phantom: density size mismatch");
    bool positive = false;
    for (double v : density) {
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("Phantom: density must be finite and >= 0");
        positive = positive || v > 0.0;
    }
    if (!positive) throw std::invalid_argument("Phantom: density is identically zero");
}

PhantomKind phantom_kind_from_name(const std::string& name) {
    if (name == "vesicle") return PhantomKind::vesicle;
    if (name == "disks") return PhantomKind::disks;
    throw std::invalid_argument("unknown phantom kind: " + name);
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

void normalize_to_unit_max(std::vector<double>& d) {
    double mx = 0.0;
    for (double v : d) mx = std::max(mx, v);
    if (mx > 0.0)
        for (double& v : d) v = std::min(1.0, v / mx);
}

double smoothstep01(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

// Deformed vesicle: a membrane shell hugging an asymmetric outline, a tilted
// interior, and a few brighter granules. The odd angular harmonics in the
// outline and the interior gradient deliberately break centrosymmetry --
// without them the dominant ring makes the twin image nearly feasible and
// every projection algorithm stagnates on superpositions of the two.
std::vector<double> vesicle_density(Lattice lat, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double m = std::min(lat.n1, lat.n2);
    const double cr = (lat.n1 - 1) / 2.0, cc = (lat.n2 - 1) / 2.0;
    const double r0 = 0.30 * m;  // mean outline radius

    const double p1 = kTwoPi * uni(rng);
    const double p2 = kTwoPi * uni(rng);
    const double p3 = kTwoPi * uni(rng);
    const double pb = kTwoPi * uni(rng);   // shell brightness modulation
    const double psi = kTwoPi * uni(rng);  // interior gradient direction

    struct Granule {
        double r, c, rho, amp;
    };
    const auto outline = [&](double phi) {
        return r0 * (1.0 + 0.13 * std::cos(phi - p1) + 0.08 * std::cos(2.0 * phi - p2) +
                     0.06 * std::cos(3.0 * phi - p3));
    };
    std::vector<Granule> granules(7);
    for (auto& g : granules) {
        const double ang = kTwoPi * uni(rng);
        const double rad = std::sqrt(uni(rng)) * 0.60 * outline(ang);
        g.r = cr + rad * std::cos(ang);
        g.c = cc + rad * std::sin(ang);
        g.rho = (0.055 + 0.065 * uni(rng)) * m;
        g.amp = 0.35 + 0.50 * uni(rng);
    }

    std::vector<double> d(lat.size(), 0.0);
    for (int i = 0; i < lat.n1; ++i) {
        for (int j = 0; j < lat.n2; ++j) {
            const double dr = i - cr, dc = j - cc;
            const double dist = std::hypot(dr, dc);
            const double phi = std::atan2(dc, dr);
            const double x = dist / outline(phi);  // boundary at exactly 1
            if (x >= 1.0) continue;

            const double taper = smoothstep01((1.0 - x) / 0.06);
            const double shell = 0.85 * (1.0 + 0.20 * std::cos(phi - pb)) *
                                 std::exp(-0.5 * std::pow((x - 0.90) / 0.05, 2));
            const double env = smoothstep01((0.85 - x) / 0.10);
            const double interior =
                env * (0.22 + 0.14 * (dr * std::cos(psi) + dc * std::sin(psi)) / r0);
            double v = shell + std::max(0.0, interior);
            for (const auto& g : granules) {
                const double gd = std::hypot(i - g.r, j - g.c);
                v += env * g.amp * std::exp(-gd * gd / (2.0 * g.rho * g.rho));
            }
            d[lat.at(i, j)] = taper * v;
        }
    }
    normalize_to_unit_max(d);
    return d;
}

std::vector<double> disks_density(Lattice lat, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> extra(0, 2);
    const double m = std::min(lat.n1, lat.n2);
    const int count = 3 + extra(rng);

    struct Disk {
        double r, c, rho, amp;
    };
    std::vector<Disk> disks;
    for (int k = 0; k < count; ++k) {
        Disk dk{0, 0, 0, 0};
        for (int attempt = 0; attempt < 30; ++attempt) {
            dk.r = (0.18 + 0.64 * uni(rng)) * (lat.n1 - 1);
            dk.c = (0.18 + 0.64 * uni(rng)) * (lat.n2 - 1);
            dk.rho = (0.09 + 0.06 * uni(rng)) * m;
            bool clear = true;
            for (const auto& other : disks)
                if (std::hypot(dk.r - other.r, dk.c - other.c) <
                    0.8 * (dk.rho + other.rho))
                    clear = false;
            if (clear) break;
        }
        dk.amp = 0.4 + 0.6 * uni(rng);
        disks.push_back(dk);
    }

    std::vector<double> d(lat.size(), 0.0);
    for (int i = 0; i < lat.n1; ++i) {
        for (int j = 0; j < lat.n2; ++j) {
            double v = 0.0;
            for (const auto& dk : disks) {
                const double dist = std::hypot(i - dk.r, j - dk.c);
                v += dk.amp * std::clamp((dk.rho - dist) / 1.5, 0.0, 1.0);
            }
            d[lat.at(i, j)] = v;
        }
    }
    normalize_to_unit_max(d);
    return d;
}

double nonzero_fraction(const std::vector<double>& d) {
    std::size_t nz = 0;
    for (double v : d)
        if (v > 0.0) ++nz;
    return double(nz) / double(d.size());
}

}  // namespace

Phantom make_phantom(PhantomKind kind, Lattice object_size, std::uint64_t seed) {
    if (object_size.n1 < 16 || object_size.n2 < 16)
        throw std::invalid_argument("make_phantom: object must be at least 16x16");
    if (kind == PhantomKind::vesicle)
        return Phantom(object_size, vesicle_density(object_size, seed), "vesicle");

    // Reseed until the disk coverage lands in a sane band; deterministic per seed.
    std::uint64_t s = seed;
    std::vector<double> d;
    for (int attempt = 0; attempt < 8; ++attempt) {
        d = disks_density(object_size, s);
        const double frac = nonzero_fraction(d);
        if (frac >= 0.05 && frac <= 0.60) break;
        s += 0x9E3779B97F4A7C15ULL;
    }
    return Phantom(object_size, std::move(d), "disks");
}

Phantom phantom_from_values(Lattice lat, std::vector<double> values, std::string name) {
    for (double& v : values)
        if (v < 0.0) v = 0.0;
    return Phantom(lat, std::move(values), std::move(name));
}

Field embed_density(const Phantom& p, Lattice big) {
    if (p.lattice.n1 > big.n1 || p.lattice.n2 > big.n2)
        throw std::invalid_argument("embed_density: object exceeds lattice");
    const int r0 = (big.n1 - p.lattice.n1) / 2;
    const int c0 = (big.n2 - p.lattice.n2) / 2;
    Field u(big);
    for (int i = 0; i < p.lattice.n1; ++i)
        for (int j = 0; j < p.lattice.n2; ++j)
            u.v[big.at(r0 + i, c0 + j)] = cplx(p.density[p.lattice.at(i, j)], 0.0);
    return u;
}

std::pair<Field, SupportMask> oversample(const Phantom& p, double ratio, int margin) {
    if (!(ratio >= 1.0)) throw std::invalid_argument("oversample: ratio must be >= 1");
    if (margin < 0) throw std::invalid_argument("oversample: negative margin");
    const Lattice big{int(std::ceil(ratio * p.lattice.n1)),
                      int(std::ceil(ratio * p.lattice.n2))};
    Field u = embed_density(p, big);
    SupportMask support = rect_support(big, p.lattice.n1, p.lattice.n2, margin);
    return {std::move(u), std::move(support)};
}

SupportMask tight_support(const Field& u, int margin) {
    if (margin < 0) throw std::invalid_argument("tight_support: negative margin");
    const Lattice lat = u.lattice;
    std::vector<std::uint8_t> base(lat.size(), 0);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.v[i].real() > 0.0) base[i] = 1;
    if (margin == 0) return SupportMask(lat, std::move(base));

    // Chebyshev dilation; no wraparound, mirroring rect_support's margin.
    std::vector<std::uint8_t> grown(lat.size(), 0);
    for (int i = 0; i < lat.n1; ++i) {
        for (int j = 0; j < lat.n2; ++j) {
            if (!base[lat.at(i, j)]) continue;
            const int i0 = std::max(0, i - margin), i1 = std::min(lat.n1 - 1, i + margin);
            const int j0 = std::max(0, j - margin), j1 = std::min(lat.n2 - 1, j + margin);
            for (int a = i0; a <= i1; ++a)
                for (int c = j0; c <= j1; ++c) grown[lat.at(a, c)] = 1;
        }
    }
    return SupportMask(lat, std::move(grown));
}

MagnitudeData simulate_magnitudes(const Field& u0, const NoiseSpec& noise,
                                  double beamstop_radius) {
    if (beamstop_radius < 0.0)
        throw std::invalid_argument("simulate_magnitudes: negative beamstop radius");
    double peak = 0.0;
    for (const cplx& v : u0.v) peak = std::max(peak, std::abs(v));
    for (const cplx& v : u0.v) {
        if (std::abs(v.imag()) > 1e-12 * std::max(1.0, peak) || v.real() < -1e-12)
            throw std::invalid_argument(
                "simulate_magnitudes: object must be real and nonnegative");
    }
    const bool noisy = noise.poisson_enabled || noise.readout_sigma > 0.0;
    if (noisy && !(noise.flux > 0.0))
        throw std::invalid_argument("simulate_magnitudes: flux must be positive");
    if (noise.readout_sigma < 0.0)
        throw std::invalid_argument("simulate_magnitudes: negative readout sigma");

    const Lattice lat = u0.lattice;
    const Field f = dft2(u0);
    std::vector<double> b(lat.size());

    if (!noisy) {
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::abs(f.v[i]);
    } else {
        double total = 0.0;
        for (const cplx& v : f.v) total += std::norm(v);
        if (total <= 0.0)
            throw std::invalid_argument("simulate_magnitudes: zero-intensity field");
        const double scale = noise.flux / total;
        const double root_scale = std::sqrt(scale);
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<double> readout(0.0, noise.readout_sigma);
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double lambda = std::norm(f.v[i]) * scale;
            double intensity;
            if (noise.poisson_enabled) {
                std::poisson_distribution<long long> pois(lambda);
                intensity = double(pois(rng));
            } else {
                intensity = lambda;
            }
            if (noise.readout_sigma > 0.0) intensity += readout(rng);
            b[i] = std::sqrt(std::max(0.0, intensity)) / root_scale;
        }
    }

    std::vector<std::uint8_t> measured(lat.size(), 1);
    if (beamstop_radius > 0.0) {
        const RadialMap freq = freq_radial_map(lat);
        for (std::size_t i = 0; i < measured.size(); ++i) {
            if (freq.r[i] < beamstop_radius) {
                measured[i] = 0;
                b[i] = 0.0;
            }
        }
    }
    return MagnitudeData(lat, std::move(b), std::move(measured));
}

double r_noise(const MagnitudeData& data, const Field& u0) {
    if (data.lattice != u0.lattice)
        throw std::invalid_argument("r_noise: lattice mismatch");
    const Field f = dft2(u0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!data.measured[i]) continue;
        const double clean = std::abs(f.v[i]);
        num += std::abs(data.b[i] - clean);
        den += clean;
    }
    if (den == 0.0) throw std::invalid_argument("r_noise: zero reference magnitudes");
    return num / den;
}

FluxCalibration calibrate_flux(const Field& u0, double readout_sigma,
                               double target_r_noise, double beamstop_radius,
                               std::uint64_t seed) {
    if (!(target_r_noise > 0.0))
        throw std::invalid_argument("calibrate_flux: target must be positive");

    const auto median_noise = [&](double log_flux) {
        std::array<double, 5> r{};
        for (int j = 0; j < 5; ++j) {
            NoiseSpec spec{std::pow(10.0, log_flux), readout_sigma, true,
                           seed + 1000003ULL * std::uint64_t(j)};
            r[j] = r_noise(simulate_magnitudes(u0, spec, beamstop_radius), u0);
        }
        std::sort(r.begin(), r.end());
        return r[2];
    };

    double lo = 2.0, hi = 14.0;
    for (int iter = 0; iter < 12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (median_noise(mid) > target_r_noise)
            lo = mid;  // too noisy: raise the flux
        else
            hi = mid;
    }
    const double log_flux = 0.5 * (lo + hi);
    FluxCalibration out;
    out.flux = std::pow(10.0, log_flux);
    out.achieved_r_noise = median_noise(log_flux);
    out.within_band =
        std::abs(out.achieved_r_noise - target_r_noise) <= 0.1 * target_r_noise;
    return out;
}

}  // namespace phaseret
