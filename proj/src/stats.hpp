#pragma once

#include <cstddef>
#include <span>

namespace fdx {

// Standard normal CDF.
double normal_cdf(double z);
// Upper tail P(X > z), computed directly from erfc to stay accurate far out.
double normal_upper_tail(double z);
// Inverse CDF. Accurate to ~1e-15 (rational approximation plus one Halley step).
double normal_quantile(double p);

double mean(std::span<const double> x);
// Population (divide-by-n) variance. Used everywhere variance is unqualified.
double population_variance(std::span<const double> x);
// Population skewness; 0 when the variance is below 1e-12.
double skewness(std::span<const double> x);
// Population excess kurtosis; 0 when the variance is below 1e-12.
double excess_kurtosis(std::span<const double> x);
double rms(std::span<const double> x);
double peak(std::span<const double> x);

// Empirical quantile with linear interpolation between order statistics
// (h = p * (n - 1)).
double quantile(std::span<const double> sorted, double p);

}  // namespace fdx
