#pragma once

// First-order sensitivity of explanations to training randomness.
//
// For an m' x n attention matrix (models x words):
//   signal = sample variance over words of the per-word mean over models
//   noise  = mean over words of the per-word sample variance over models
//   snr    = signal / noise
// All variances use the unbiased (n - 1 / m' - 1) convention. Under i.i.d.
// model noise the raw signal overestimates the cross-word variance of the
// true means by noise / m'; bias_corrected_signal removes that term.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xsnr/core.hpp"
#include "xsnr/interval.hpp"

namespace xsnr {

AttentionMap mean_map(const AttentionMatrix& matrix);

double signal(const AttentionMatrix& matrix);
double signal_deterministic(const AttentionMap& map);
double noise(const AttentionMatrix& matrix);

/// +infinity when noise is zero and signal positive; DegenerateInputError
/// when both vanish.
double snr(const AttentionMatrix& matrix);

/// signal - noise / m'. May be negative; the value is reported as is.
double bias_corrected_signal(const AttentionMatrix& matrix);

struct SignalNoise {
  double signal = 0.0;
  double noise = 0.0;
};

/// Signal and noise of the matrix formed by `rows` (indices may repeat),
/// without materializing it. Requires at least two rows and two words.
SignalNoise signal_and_noise(const AttentionMatrix& matrix,
                             std::span<const std::size_t> rows);

/// signal / noise with the same infinite / degenerate conventions as snr().
double ratio_or_infinite(double signal, double noise);

struct EstimatorOptions {
  bool bias_correction = false;
  static constexpr const char* kVarianceConvention = "unbiased";
};

struct SensitivityReport {
  std::string text_id;
  std::size_t m_used = 0;
  double signal = 0.0;
  double noise = 0.0;
  /// May be +infinity.
  double snr = 0.0;
  std::optional<double> bias_corrected_signal;
  EstimatorOptions estimator_options;

  // Filled in by the uncertainty module when requested.
  std::optional<ConfidenceInterval> signal_ci;
  std::optional<ConfidenceInterval> noise_ci;
  std::optional<ConfidenceInterval> snr_ci;
  std::optional<ConfidenceInterval> bias_corrected_signal_ci;
};

SensitivityReport sensitivity_report(const AttentionMatrix& matrix,
                                     const EstimatorOptions& options = {});

struct SizeSweep {
  std::vector<std::size_t> sizes;
  std::vector<SensitivityReport> reports;
  std::uint64_t permutation_seed = 0;
};

/// Called once per size with the report and the prefix matrix it came from.
using SweepDecorator =
    std::function<void(SensitivityReport&, const AttentionMatrix&)>;

/// Shuffles model rows once with `seed`, then reports on nested prefixes of
/// the shuffled matrix, one per entry of `sizes` (strictly increasing, each
/// in [2, m']).
SizeSweep size_sweep(const AttentionMatrix& matrix, std::span<const std::size_t> sizes,
                     std::uint64_t seed, const EstimatorOptions& options = {},
                     const SweepDecorator& decorate = {});

}  // namespace xsnr
