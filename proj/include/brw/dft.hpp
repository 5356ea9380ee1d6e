#pragma once

#include <complex>
#include <span>
#include <vector>

#include "brw/kernel.hpp"

namespace brw {

/// Discrete Fourier transform on a torus with the convention
///   f^(theta_j) = sum_u f(u) e^{+i theta_j . u},
///   f(u)        = (1/N) sum_j f^(theta_j) e^{-i theta_j . u},
/// where theta_j = 2 pi j / L componentwise and both tables are indexed like sites.
std::vector<std::complex<double>> dft_forward(const TorusGrid& grid,
                                              std::span<const std::complex<double>> f);
std::vector<std::complex<double>> dft_inverse(const TorusGrid& grid,
                                              std::span<const std::complex<double>> fhat);

/// Forward transform of a real table.
std::vector<std::complex<double>> dft_forward_real(const TorusGrid& grid, std::span<const double> f);
/// Inverse transform keeping the real part (exact for transforms of real even tables).
std::vector<double> dft_inverse_real(const TorusGrid& grid, std::span<const double> fhat);

} // namespace brw
