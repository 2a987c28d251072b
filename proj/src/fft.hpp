#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fdx {

// In-place iterative radix-2 transform. Length must be a power of two.
void fft(std::vector<std::complex<double>>& a);

// One-sided magnitude spectrum |X_0| .. |X_{n/2}| of a real signal.
std::vector<double> magnitude_spectrum(std::span<const double> x);

bool is_power_of_two(std::size_t n);

}  // namespace fdx
