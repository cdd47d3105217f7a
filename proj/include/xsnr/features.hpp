#pragma once

// Deterministic feature-based baseline: linguistic feature extraction, an
// L2-regularized logistic regression trained by full-batch gradient descent
// and word-level "linguistic attention maps".

#include <cstdint>
#include <filesystem>
#include <memory>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xsnr/core.hpp"

namespace xsnr {

enum class FeatureKind { kTokenRatio, kGlobal };

/// Token carries any of the listed annotation tags.
struct TagMatcher {
  std::set<std::string> tags;
};

/// Normalized surface belongs to a word list.
struct LexiconMatcher {
  std::set<std::string> terms;
};

/// ECMAScript regex searched in the normalized surface.
struct RegexMatcher {
  std::string pattern;
  std::shared_ptr<const std::regex> compiled;
};

/// Surface has at least `min_chars` code points.
struct LengthMatcher {
  std::size_t min_chars = 1;
};

enum class GlobalStatistic { kCorrectedTypeTokenRatio, kMeanWordLength };

using FeatureRule =
    std::variant<TagMatcher, LexiconMatcher, RegexMatcher, LengthMatcher, GlobalStatistic>;

struct FeatureSpec {
  std::string feature_id;
  FeatureRule rule;

  FeatureKind kind() const;
  /// Token-ratio features only.
  bool matches(const Token& token) const;
  bool needs_annotations() const;
};

FeatureSpec make_tag_feature(std::string id, std::set<std::string> tags);
FeatureSpec make_lexicon_feature(std::string id, std::set<std::string> terms);
FeatureSpec make_regex_feature(std::string id, std::string pattern);
FeatureSpec make_length_feature(std::string id, std::size_t min_chars);
FeatureSpec make_global_feature(std::string id, GlobalStatistic statistic);

/// Ordered list of features with unique ids.
class FeatureRegistry {
 public:
  FeatureRegistry() = default;
  explicit FeatureRegistry(std::vector<FeatureSpec> specs);

  const std::vector<FeatureSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return specs_[i]; }

  /// Self-contained form (lexicons inlined).
  nlohmann::json to_json() const;
  /// FNV-1a 64 of the compact self-contained JSON, as 16 hex digits.
  std::string hash() const;

  /// Lexicon entries may give `terms` inline or a `path` to a UTF-8 file
  /// with one term per line, resolved against `base_dir`.
  static FeatureRegistry from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static FeatureRegistry load(const std::filesystem::path& path);

 private:
  std::vector<FeatureSpec> specs_;
};

/// One term per line; blank lines and lines starting with '#' skipped;
/// terms are normalized like token surfaces.
std::set<std::string> load_lexicon(const std::filesystem::path& path);

struct FeatureVector {
  std::string text_id;
  std::vector<double> values;
};

FeatureVector extract_features(const TokenizedText& text, const FeatureRegistry& registry);

struct LabeledVector {
  FeatureVector features;
  int label = 0;
};

struct Standardization {
  double mean = 0.0;
  double std = 1.0;
};

struct FeatureModel {
  FeatureRegistry registry;
  std::vector<Standardization> standardization;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  double validation_accuracy = 0.0;
  double final_gradient_norm = 0.0;
  std::size_t iterations = 0;

  nlohmann::json to_json() const;
  static FeatureModel from_json(const nlohmann::json& j);

  std::vector<double> standardize(const FeatureVector& features) const;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm)
      : Error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

struct TrainOptions {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 1'000'000;
};

/// Rows of standardized features with 0/1 labels.
struct Design {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

struct LogisticFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double loss = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

/// mean_i[log(1 + e^z_i) - y_i z_i] + (lambda / 2) |w|^2 with
/// z_i = w . x_i + b; the intercept is not penalized.
double regularized_logistic_loss(const Design& design, std::span<const double> coefficients,
                                 double intercept, double lambda);

/// Gradient descent with Armijo backtracking from w = 0, b = 0 until the
/// gradient norm drops to the tolerance. Throws ConvergenceError at the
/// iteration cap.
LogisticFit fit_logistic(const Design& design, double lambda, const TrainOptions& options = {});

/// Standardizes on training statistics, fits every lambda and keeps the one
/// with the best validation accuracy (ties: largest lambda). Training rows
/// are put in a canonical order first, so the result does not depend on the
/// order of `train_set`.
FeatureModel train(const FeatureRegistry& registry, std::span<const LabeledVector> train_set,
                   std::span<const double> lambda_grid,
                   std::span<const LabeledVector> validation_set,
                   const TrainOptions& options = {});

struct Prediction {
  int label = 0;
  double probability = 0.5;
};

Prediction predict(const FeatureModel& model, const FeatureVector& features);

double accuracy(const FeatureModel& model, std::span<const LabeledVector> data);

/// Word weight = sum of |coefficient| over the token-ratio features the word
/// matches; optionally rescaled to unit L1 mass.
AttentionMap linguistic_attention_map(const FeatureModel& model, const TokenizedText& text,
                                      bool l1_rescale = true);

inline constexpr std::string_view kFeatureModelId = "feature_model";

}  // namespace xsnr
