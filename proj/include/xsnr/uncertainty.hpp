#pragma once

#include <cstdint>
#include <string_view>

#include "xsnr/core.hpp"
#include "xsnr/interval.hpp"
#include "xsnr/metrics.hpp"

namespace xsnr {

enum class Statistic { kSignal, kNoise, kSnr, kBiasCorrectedSignal };

std::string_view to_string(Statistic statistic);
Statistic parse_statistic(std::string_view name);

struct BootstrapConfig {
  std::size_t replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  /// 0 picks std::thread::hardware_concurrency(). The interval does not
  /// depend on this value.
  unsigned threads = 1;
};

inline constexpr std::size_t kMinBootstrapReplicates = 100;
/// Fraction of excluded replicates above which an interval is unreliable.
inline constexpr double kUnreliableExclusionRate = 0.01;

/// Percentile bootstrap over model rows: each replicate draws m' rows with
/// replacement from the stream stream_seed(seed, replicate). Replicates with
/// an infinite or undefined SNR are excluded and counted.
ConfidenceInterval bootstrap_ci(const AttentionMatrix& matrix, Statistic statistic,
                                const BootstrapConfig& config);

/// Interval for a variance from the chi-square pivot
/// (n - 1) s^2 / sigma^2 ~ chi2(n - 1), with s^2 the sample variance of the
/// map's weights.
ConfidenceInterval variance_ci_chisquare(const AttentionMap& map, double level = 0.95);

/// Adds bootstrap intervals for signal, noise, SNR (and the bias-corrected
/// signal when the report carries one).
void attach_bootstrap_cis(SensitivityReport& report, const AttentionMatrix& matrix,
                          const BootstrapConfig& config);

}  // namespace xsnr
