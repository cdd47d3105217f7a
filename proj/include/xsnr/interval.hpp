#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace xsnr {

enum class CiMethod { kPercentileBootstrap, kChiSquareVariance };

std::string_view to_string(CiMethod method);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::kPercentileBootstrap;
  // Bootstrap only.
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  /// Replicates dropped because the statistic was infinite or undefined.
  std::size_t excluded = 0;
  /// Set when more than 1% of replicates were excluded.
  bool unreliable = false;

  bool contains(double value) const { return lower <= value && value <= upper; }
  double width() const { return upper - lower; }
};

}  // namespace xsnr
