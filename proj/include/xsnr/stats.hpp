#pragma once

#include <span>

namespace xsnr::stats {

/// Mean computed relative to the first element, so a constant sequence
/// yields that constant exactly. Empty input returns 0.
double mean(std::span<const double> values);

/// Unbiased (n - 1) sample variance, two-pass around `mean`. Requires at
/// least two values.
double sample_variance(std::span<const double> values);

/// Linear interpolation between order statistics (Hyndman-Fan type 7) on an
/// already sorted, non-empty range; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Lower-tail chi-square quantile: x such that P(X <= x) = p for X with
/// `df` degrees of freedom.
double chi_square_quantile(double p, double df);

}  // namespace xsnr::stats
