#include "phaseret/grid.hpp"

#include <cmath>

namespace phaseret {

void SupportMask::validate() const {
    bool any_in = false, any_out = false;
    for (auto m : inside) {
        (m ? any_in : any_out) = true;
        if (any_in && any_out) return;
    }
    throw std::invalid_argument("SupportMask: must contain inside and outside pixels");
}

SupportMask rect_support(Lattice lat, int rows, int cols, int margin) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("rect_support: empty interior");
    const int r0 = (lat.n1 - rows) / 2 - margin;
    const int c0 = (lat.n2 - cols) / 2 - margin;
    const int r1 = r0 + rows + 2 * margin;  // exclusive
    const int c1 = c0 + cols + 2 * margin;
    if (r0 < 0 || c0 < 0 || r1 > lat.n1 || c1 > lat.n2)
        throw std::invalid_argument("rect_support: support exceeds lattice");
    std::vector<std::uint8_t> mask(lat.size(), 0);
    for (int i = r0; i < r1; ++i)
        for (int j = c0; j < c1; ++j)
            mask[lat.at(i, j)] = 1;
    return SupportMask(lat, std::move(mask));
}

RadialMap radial_map(Lattice lat) {
    RadialMap m{lat, std::vector<double>(lat.size())};
    const int ci = lat.center_row(), cj = lat.center_col();
    for (int i = 0; i < lat.n1; ++i)
        for (int j = 0; j < lat.n2; ++j)
            m.r[lat.at(i, j)] = std::hypot(double(i - ci), double(j - cj));
    return m;
}

RadialMap freq_radial_map(Lattice lat) {
    RadialMap m{lat, std::vector<double>(lat.size())};
    for (int a = 0; a < lat.n1; ++a)
        for (int b = 0; b < lat.n2; ++b)
            m.r[lat.at(a, b)] =
                std::hypot(double(signed_freq(a, lat.n1)), double(signed_freq(b, lat.n2)));
    return m;
}

double norm2_sq(const Field& f) {
    double s = 0.0;
    for (const auto& z : f.v) s += std::norm(z);
    return s;
}

double norm2(const Field& f) { return std::sqrt(norm2_sq(f)); }

bool all_finite(const Field& f) {
    for (const auto& z : f.v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

}  // namespace phaseret
