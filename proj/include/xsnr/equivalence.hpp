#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xsnr/core.hpp"

namespace xsnr {

/// Two-sided 5% critical value of the standard normal.
inline constexpr double kDefaultZThreshold = 1.96;

/// |a - b| / sqrt(p(1 - p) / n) with p = (a + b) / 2, the two-proportion
/// Z statistic for accuracies measured on the same n test items. Returns 0
/// when a == b.
double z_statistic(double a, double b, std::int64_t n);

struct EquivalenceResult {
  double z = 0.0;
  double threshold = kDefaultZThreshold;
  bool equivalent = true;
  double a = 0.0;
  double b = 0.0;
  std::int64_t n = 1;
};

EquivalenceResult test_equivalence(double a, double b, std::int64_t n,
                                   double threshold = kDefaultZThreshold);

struct EquivalentSubset {
  /// Descending accuracy, ties by ascending model id.
  std::vector<std::string> model_ids;
  double a_best = 0.0;
  double b_worst = 0.0;
  double z = 0.0;
  double threshold = kDefaultZThreshold;
};

/// Longest prefix of the accuracy-sorted ensemble whose best-vs-worst Z is
/// below `threshold`, optionally capped at `max_size` models. All records
/// must share n_test.
EquivalentSubset select_equivalent_subset(std::span<const ModelRecord> models,
                                          double threshold = kDefaultZThreshold,
                                          std::optional<std::size_t> max_size = std::nullopt);

}  // namespace xsnr
