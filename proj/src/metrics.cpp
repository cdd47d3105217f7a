#include "xsnr/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "xsnr/rng.hpp"
#include "xsnr/stats.hpp"

namespace xsnr {

namespace {

void require_words(std::size_t n) {
  if (n < 2) {
    throw ValidationError("signal needs at least two words (variance over words undefined)");
  }
}

void require_models(std::size_t m) {
  if (m < 2) {
    throw ValidationError("noise needs at least two models (variance over models undefined)");
  }
}

// Per-word means over the selected rows, taken relative to the first
// selected row so identical rows reproduce that row bit for bit.
std::vector<double> column_means(const AttentionMatrix& matrix,
                                 std::span<const std::size_t> rows) {
  const std::size_t n = matrix.n_words();
  const auto origin = matrix.row(rows.front());
  std::vector<double> sums(n, 0.0);
  for (std::size_t r : rows) {
    const auto values = matrix.row(r);
    for (std::size_t j = 0; j < n; ++j) sums[j] += values[j] - origin[j];
  }
  const auto m = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < n; ++j) sums[j] = origin[j] + sums[j] / m;
  return sums;
}

std::vector<std::size_t> all_rows(const AttentionMatrix& matrix) {
  std::vector<std::size_t> rows(matrix.n_models());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

AttentionMap mean_map(const AttentionMatrix& matrix) {
  return AttentionMap{matrix.text_id(), std::string(kMeanModelId),
                      column_means(matrix, all_rows(matrix))};
}

double signal(const AttentionMatrix& matrix) {
  require_words(matrix.n_words());
  return stats::sample_variance(column_means(matrix, all_rows(matrix)));
}

double signal_deterministic(const AttentionMap& map) {
  require_words(map.size());
  return stats::sample_variance(map.weights);
}

SignalNoise signal_and_noise(const AttentionMatrix& matrix,
                             std::span<const std::size_t> rows) {
  require_words(matrix.n_words());
  require_models(rows.size());
  const std::size_t n = matrix.n_words();
  const std::vector<double> means = column_means(matrix, rows);
  std::vector<double> squares(n, 0.0);
  for (std::size_t r : rows) {
    const auto values = matrix.row(r);
    for (std::size_t j = 0; j < n; ++j) {
      const double d = values[j] - means[j];
      squares[j] += d * d;
    }
  }
  const auto dof = static_cast<double>(rows.size() - 1);
  double total = 0.0;
  for (double s : squares) total += s / dof;
  return {stats::sample_variance(means), total / static_cast<double>(n)};
}

double noise(const AttentionMatrix& matrix) {
  require_models(matrix.n_models());
  require_words(matrix.n_words());
  return signal_and_noise(matrix, all_rows(matrix)).noise;
}

double ratio_or_infinite(double signal_value, double noise_value) {
  if (noise_value > 0.0) return signal_value / noise_value;
  if (signal_value > 0.0) return std::numeric_limits<double>::infinity();
  throw DegenerateInputError(
      "signal and noise are both zero: constant attention matrix carries no information");
}

double snr(const AttentionMatrix& matrix) {
  const auto sn = signal_and_noise(matrix, all_rows(matrix));
  return ratio_or_infinite(sn.signal, sn.noise);
}

double bias_corrected_signal(const AttentionMatrix& matrix) {
  const auto sn = signal_and_noise(matrix, all_rows(matrix));
  return sn.signal - sn.noise / static_cast<double>(matrix.n_models());
}

SensitivityReport sensitivity_report(const AttentionMatrix& matrix,
                                     const EstimatorOptions& options) {
  const auto sn = signal_and_noise(matrix, all_rows(matrix));
  SensitivityReport report;
  report.text_id = matrix.text_id();
  report.m_used = matrix.n_models();
  report.signal = sn.signal;
  report.noise = sn.noise;
  report.snr = ratio_or_infinite(sn.signal, sn.noise);
  report.estimator_options = options;
  if (options.bias_correction) {
    report.bias_corrected_signal =
        sn.signal - sn.noise / static_cast<double>(matrix.n_models());
  }
  return report;
}

SizeSweep size_sweep(const AttentionMatrix& matrix, std::span<const std::size_t> sizes,
                     std::uint64_t seed, const EstimatorOptions& options,
                     const SweepDecorator& decorate) {
  if (sizes.empty()) throw ValidationError("size sweep: no sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2 || sizes[i] > matrix.n_models()) {
      throw ValidationError("size sweep: size " + std::to_string(sizes[i]) +
                            " outside [2, " + std::to_string(matrix.n_models()) + "]");
    }
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ValidationError("size sweep: sizes must be strictly increasing");
    }
  }

  SplitMix64 rng(seed);
  const auto order = random_permutation(matrix.n_models(), rng);
  const AttentionMatrix shuffled = matrix.select_rows(order);

  SizeSweep sweep;
  sweep.permutation_seed = seed;
  sweep.sizes.assign(sizes.begin(), sizes.end());
  for (std::size_t k : sizes) {
    const AttentionMatrix prefix = shuffled.prefix(k);
    SensitivityReport report = sensitivity_report(prefix, options);
    if (decorate) decorate(report, prefix);
    sweep.reports.push_back(std::move(report));
  }
  return sweep;
}

}  // namespace xsnr
