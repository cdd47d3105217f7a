#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsnr/core.hpp"
#include "xsnr/metrics.hpp"
#include "xsnr/normalization.hpp"
#include "xsnr/uncertainty.hpp"

namespace xsnr {

// ---------------------------------------------------------------------------
// Box plots

/// Per-word distribution over models. Quantiles use linear interpolation
/// between order statistics (type 7). Whiskers reach the most extreme
/// values within 1.5 IQR of the quartiles, clamped so that
/// whisker_low <= q1 and q3 <= whisker_high; values beyond the fences are
/// outliers.
struct WordBox {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

struct BoxplotSummary {
  std::string text_id;
  std::size_t m_models = 0;
  std::vector<WordBox> words;
};

WordBox word_box(std::span<const double> values);
BoxplotSummary boxplot_summary(const AttentionMatrix& matrix);
/// Single deterministic map: every box collapses to a line.
BoxplotSummary boxplot_summary(const AttentionMap& map);

// ---------------------------------------------------------------------------
// Transformer-vs-feature comparison

struct CompareOptions {
  std::vector<std::size_t> sizes;  // empty: just the full ensemble
  std::uint64_t seed = 0;
  EstimatorOptions estimator;
  std::optional<BootstrapConfig> bootstrap;  // nullopt: no bootstrap intervals
  double ci_level = 0.95;
  std::optional<NormalizationSpec> normalization;  // nullopt: raw only
};

struct ComparisonVariant {
  SizeSweep sweep;
  SensitivityReport full;  // all m' models
  double feature_signal = 0.0;
  ConfidenceInterval feature_signal_ci;
  /// Headline comparison: ensemble signal strictly below feature signal.
  bool transformer_signal_lower = false;
};

struct TextComparison {
  std::string text_id;
  LengthBucket length_bucket = LengthBucket::kMedium;
  ComparisonVariant raw;
  std::optional<ComparisonVariant> normalized;
  std::optional<std::size_t> normalized_support;
};

struct ComparisonReport {
  double ci_level = 0.95;
  std::vector<TextComparison> entries;  // sorted by text_id
};

/// Inputs are matched by text id; every text needs exactly one matrix and
/// one feature map.
ComparisonReport compare(std::span<const TokenizedText> texts,
                         std::span<const AttentionMatrix> transformer_inputs,
                         std::span<const AttentionMap> feature_maps,
                         const CompareOptions& options);

// ---------------------------------------------------------------------------
// Emission. Machine-readable numbers are written at full precision;
// infinite SNR values appear as the string "infinite".

nlohmann::json to_json(const ConfidenceInterval& ci);
nlohmann::json to_json(const SensitivityReport& report);
nlohmann::json to_json(const SizeSweep& sweep);
nlohmann::json to_json(const BoxplotSummary& summary,
                       const TokenizedText* text = nullptr);
nlohmann::json to_json(const ComparisonReport& report);

std::string boxplot_csv(const BoxplotSummary& summary, const TokenizedText& text);
std::string comparison_csv(const ComparisonReport& report);

std::string boxplot_svg(const BoxplotSummary& summary, const TokenizedText& text);
std::string comparison_svg(const ComparisonReport& report);

}  // namespace xsnr
