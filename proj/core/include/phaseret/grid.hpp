#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace phaseret {

using cplx = std::complex<double>;

/// 2D index lattice, n1 rows by n2 columns, row-major addressing.
struct Lattice {
    int n1 = 0;
    int n2 = 0;

    Lattice() = default;
    Lattice(int rows, int cols) : n1(rows), n2(cols) {
        if (n1 < 2 || n2 < 2)
            throw std::invalid_argument("Lattice: sides must be >= 2");
    }

    std::size_t size() const { return static_cast<std::size_t>(n1) * n2; }
    std::size_t at(int i, int j) const { return static_cast<std::size_t>(i) * n2 + j; }

    /// Center pixel, 0-based: (floor(n1/2), floor(n2/2)). Matches the usual
    /// fftshift convention; used for radial maps and frequency centering alike.
    int center_row() const { return n1 / 2; }
    int center_col() const { return n2 / 2; }

    bool operator==(const Lattice& o) const { return n1 == o.n1 && n2 == o.n2; }
    bool operator!=(const Lattice& o) const { return !(*this == o); }
};

/// Complex field on a lattice (image, Fourier data, or dual variable).
struct Field {
    Lattice lattice;
    std::vector<cplx> v;

    Field() = default;
    explicit Field(Lattice lat, cplx fill = {0.0, 0.0})
        : lattice(lat), v(lat.size(), fill) {}
    Field(Lattice lat, std::vector<cplx> values) : lattice(lat), v(std::move(values)) {
        if (v.size() != lattice.size())
            throw std::invalid_argument("Field: value count does not match lattice");
    }

    cplx& operator()(int i, int j) { return v[lattice.at(i, j)]; }
    const cplx& operator()(int i, int j) const { return v[lattice.at(i, j)]; }

    std::size_t size() const { return v.size(); }
};

/// Boolean mask marking the support region S (true = inside).
struct SupportMask {
    Lattice lattice;
    std::vector<std::uint8_t> inside;

    SupportMask() = default;
    SupportMask(Lattice lat, std::vector<std::uint8_t> mask)
        : lattice(lat), inside(std::move(mask)) {
        if (inside.size() != lattice.size())
            throw std::invalid_argument("SupportMask: size mismatch");
        validate();
    }

    bool operator()(int i, int j) const { return inside[lattice.at(i, j)] != 0; }

    /// At least one pixel inside and one outside (oversampling implies a
    /// zero-density region).
    void validate() const;
};

/// Centered rectangular support of the given interior size, optionally dilated
/// by `margin` pixels on every side.
SupportMask rect_support(Lattice lat, int rows, int cols, int margin = 0);

/// Per-pixel Euclidean distance (in pixels) to the lattice center.
struct RadialMap {
    Lattice lattice;
    std::vector<double> r;

    double operator()(int i, int j) const { return r[lattice.at(i, j)]; }
};

/// Distance-to-center map; exactly one zero entry, at the center pixel.
RadialMap radial_map(Lattice lat);

/// Same radial values arranged in DFT (unshifted) order: entry (a,b) holds the
/// magnitude of the signed frequency pair, so the zero sits at index (0,0).
RadialMap freq_radial_map(Lattice lat);

/// Signed frequency for DFT index a on an n-point axis, range
/// [-floor(n/2), n-1-floor(n/2)].
inline int signed_freq(int a, int n) {
    const int half = n / 2;
    return (a + half) % n - half;
}

double norm2(const Field& f);        // l2 norm
double norm2_sq(const Field& f);     // squared l2 norm
bool all_finite(const Field& f);

}  // namespace phaseret
