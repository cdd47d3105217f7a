#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xsnr {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad dimensions, out-of-range values,
/// missing fields). The CLI maps it to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but carries no usable information, e.g. a
/// constant attention matrix. The CLI maps it to exit code 2.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// NFC normalization followed by full Unicode lowercasing (root locale).
std::string normalize_surface(std::string_view surface);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

struct Token {
  std::string surface;
  std::string normalized;
  /// Absent when ingestion did not annotate the token at all; an empty set
  /// means "annotated, no tags".
  std::optional<std::set<std::string>> annotations;

  Token() = default;
  explicit Token(std::string surface_text,
                 std::optional<std::set<std::string>> tags = std::nullopt);

  bool has_tag(std::string_view tag) const;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class LengthBucket { kShort, kMedium, kLong };

inline constexpr std::size_t kShortTextLimit = 50;
inline constexpr std::size_t kLongTextLimit = 400;

LengthBucket length_bucket_for(std::size_t token_count);
std::string_view to_string(LengthBucket bucket);

struct TokenizedText {
  std::string text_id;
  std::vector<Token> tokens;
  std::optional<int> label;

  std::size_t size() const { return tokens.size(); }
  LengthBucket length_bucket() const { return length_bucket_for(tokens.size()); }

  friend bool operator==(const TokenizedText&, const TokenizedText&) = default;
};

struct ModelRecord {
  std::string model_id;
  std::int64_t seed = 0;
  double accuracy = 0.0;
  std::int64_t n_test = 1;

  /// Throws ValidationError unless 0 <= accuracy <= 1 and n_test >= 1.
  void validate() const;

  friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

/// Model id carried by a map that averages over an ensemble.
inline constexpr std::string_view kMeanModelId = "__mean__";

struct AttentionMap {
  std::string text_id;
  std::string model_id;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;
};

/// Row-major m' x n matrix of attention weights, one row per model.
/// Construction enforces m' >= 1, n >= 1, rectangular rows and finite
/// entries; instances are immutable afterwards.
class AttentionMatrix {
 public:
  AttentionMatrix(std::string text_id, std::vector<std::string> model_ids,
                  const std::vector<std::vector<double>>& rows);
  AttentionMatrix(std::string text_id, std::vector<std::string> model_ids,
                  std::size_t n_words, std::vector<double> row_major);

  const std::string& text_id() const { return text_id_; }
  const std::vector<std::string>& model_ids() const { return model_ids_; }
  std::size_t n_models() const { return model_ids_.size(); }
  std::size_t n_words() const { return n_words_; }

  double at(std::size_t model, std::size_t word) const {
    return data_[model * n_words_ + word];
  }
  std::span<const double> row(std::size_t model) const {
    return {data_.data() + model * n_words_, n_words_};
  }
  std::span<const double> data() const { return data_; }

  AttentionMap row_map(std::size_t model) const;

  /// Rows in the given order; indices may repeat.
  AttentionMatrix select_rows(std::span<const std::size_t> indices) const;
  AttentionMatrix prefix(std::size_t k) const;
  /// Keeps the rows whose model id appears in `ids`, preserving this
  /// matrix's row order. Unknown ids are a ValidationError.
  AttentionMatrix restrict_to(std::span<const std::string> ids) const;

  friend bool operator==(const AttentionMatrix&, const AttentionMatrix&) = default;

 private:
  std::string text_id_;
  std::vector<std::string> model_ids_;
  std::size_t n_words_ = 0;
  std::vector<double> data_;
};

/// Predicted class per (text_id, model_id).
class PredictionTable {
 public:
  void set(const std::string& text_id, const std::string& model_id, int label);
  std::optional<int> find(const std::string& text_id,
                          const std::string& model_id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, int> entries_;
};

/// Cross-checks a matrix against the text it explains (ids and row length).
/// Returns the matrix unchanged when consistent.
const AttentionMatrix& validate_matrix(const AttentionMatrix& matrix,
                                       const TokenizedText& text);

/// Texts on which every listed model predicts the same class, in input order.
std::vector<std::string> compatible_inputs(const PredictionTable& predictions,
                                           std::span<const TokenizedText> texts,
                                           std::span<const ModelRecord> models);

}  // namespace xsnr
