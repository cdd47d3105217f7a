#include "xsnr/stats.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "xsnr/core.hpp"

namespace xsnr::stats {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double origin = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - origin;
  return origin + sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw ValidationError("sample variance needs at least two values");
  }
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m;
    ss += d * d;
  }
  return ss / static_cast<double>(values.size() - 1);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double chi_square_quantile(double p, double df) {
  if (!(df > 0.0)) throw ValidationError("chi-square degrees of freedom must be positive");
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("chi-square level outside (0, 1)");
  boost::math::chi_squared_distribution<double> dist(df);
  return boost::math::quantile(dist, p);
}

}  // namespace xsnr::stats
