#pragma once

#include "phaseret/grid.hpp"

namespace phaseret {

/// Unitary 2D DFT (1/sqrt(n) both directions), so the inverse is the adjoint.
Field dft2(const Field& u);

/// Unitary inverse 2D DFT; exact inverse and adjoint of dft2.
Field idft2(const Field& z);

enum class Domain { fourier, real };

/// Gaussian low-pass with cutoff `alpha` in frequency pixels: multiplies by
/// exp(-k^2 / (2 alpha^2)) where k is the centered frequency radius, the same
/// centering convention as radial_map. `domain` states where the input lives:
/// a Fourier-domain field is multiplied in place; a real-space field goes
/// through a dft -> multiply -> idft round trip.
Field gaussian_lowpass(const Field& z, double alpha, Domain domain);

/// Spectral derivative of a Fourier-domain field along one axis (0 = rows),
/// scaled so that ||D1 z||^2 + ||D2 z||^2 == ||r o idft2(z)||^2 exactly, with
/// r the centered radial map. Realized as dft2((-i * xc) o idft2(z)) where xc
/// is the centered pixel coordinate along the axis.
Field spectral_derivative(const Field& z, int axis);

}  // namespace phaseret
