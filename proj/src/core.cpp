#include "xsnr/core.hpp"

#include <cmath>
#include <set>
#include <string>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

namespace xsnr {

std::string normalize_surface(std::string_view surface) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error("unicode: NFC normalizer unavailable");
  }
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(surface.data(), static_cast<int32_t>(surface.size())));
  icu::UnicodeString composed = nfc->normalize(source, status);
  if (U_FAILURE(status)) {
    throw ValidationError("unicode: cannot normalize token '" +
                          std::string(surface) + "'");
  }
  composed.toLower(icu::Locale::getRoot());
  std::string out;
  composed.toUTF8String(out);
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0u) != 0x80u) ++count;
  }
  return count;
}

Token::Token(std::string surface_text, std::optional<std::set<std::string>> tags)
    : surface(std::move(surface_text)),
      normalized(normalize_surface(surface)),
      annotations(std::move(tags)) {}

bool Token::has_tag(std::string_view tag) const {
  return annotations && annotations->contains(std::string(tag));
}

LengthBucket length_bucket_for(std::size_t token_count) {
  if (token_count < kShortTextLimit) return LengthBucket::kShort;
  if (token_count > kLongTextLimit) return LengthBucket::kLong;
  return LengthBucket::kMedium;
}

std::string_view to_string(LengthBucket bucket) {
  switch (bucket) {
    case LengthBucket::kShort:
      return "short";
    case LengthBucket::kMedium:
      return "medium";
    case LengthBucket::kLong:
      return "long";
  }
  return "medium";
}

void ModelRecord::validate() const {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw ValidationError("model '" + model_id +
                          "': accuracy must lie in [0, 1]");
  }
  if (n_test < 1) {
    throw ValidationError("model '" + model_id + "': n_test must be >= 1");
  }
}

namespace {

void check_finite(std::span<const double> values, const std::string& text_id) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("text '" + text_id +
                            "': non-finite attention weight at flat index " +
                            std::to_string(i));
    }
  }
}

}  // namespace

AttentionMatrix::AttentionMatrix(std::string text_id,
                                 std::vector<std::string> model_ids,
                                 const std::vector<std::vector<double>>& rows)
    : text_id_(std::move(text_id)), model_ids_(std::move(model_ids)) {
  if (rows.empty() || model_ids_.empty()) {
    throw ValidationError("text '" + text_id_ + "': empty attention matrix");
  }
  if (rows.size() != model_ids_.size()) {
    throw ValidationError("text '" + text_id_ +
                          "': row count does not match model id count");
  }
  n_words_ = rows.front().size();
  if (n_words_ == 0) {
    throw ValidationError("text '" + text_id_ + "': empty attention matrix");
  }
  data_.reserve(rows.size() * n_words_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != n_words_) {
      throw ValidationError("text '" + text_id_ + "': dimension mismatch in row " +
                            std::to_string(i));
    }
    data_.insert(data_.end(), rows[i].begin(), rows[i].end());
  }
  check_finite(data_, text_id_);
}

AttentionMatrix::AttentionMatrix(std::string text_id,
                                 std::vector<std::string> model_ids,
                                 std::size_t n_words,
                                 std::vector<double> row_major)
    : text_id_(std::move(text_id)),
      model_ids_(std::move(model_ids)),
      n_words_(n_words),
      data_(std::move(row_major)) {
  if (model_ids_.empty() || n_words_ == 0) {
    throw ValidationError("text '" + text_id_ + "': empty attention matrix");
  }
  if (data_.size() != model_ids_.size() * n_words_) {
    throw ValidationError("text '" + text_id_ + "': dimension mismatch");
  }
  check_finite(data_, text_id_);
}

AttentionMap AttentionMatrix::row_map(std::size_t model) const {
  auto r = row(model);
  return AttentionMap{text_id_, model_ids_.at(model), {r.begin(), r.end()}};
}

AttentionMatrix AttentionMatrix::select_rows(
    std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(indices.size());
  values.reserve(indices.size() * n_words_);
  for (std::size_t index : indices) {
    if (index >= n_models()) {
      throw ValidationError("row index out of range");
    }
    ids.push_back(model_ids_[index]);
    auto r = row(index);
    values.insert(values.end(), r.begin(), r.end());
  }
  return AttentionMatrix(text_id_, std::move(ids), n_words_, std::move(values));
}

AttentionMatrix AttentionMatrix::prefix(std::size_t k) const {
  if (k == 0 || k > n_models()) {
    throw ValidationError("prefix size " + std::to_string(k) +
                          " outside [1, " + std::to_string(n_models()) + "]");
  }
  std::vector<double> values(data_.begin(),
                             data_.begin() + static_cast<std::ptrdiff_t>(k * n_words_));
  return AttentionMatrix(text_id_, {model_ids_.begin(), model_ids_.begin() + static_cast<std::ptrdiff_t>(k)},
                         n_words_, std::move(values));
}

AttentionMatrix AttentionMatrix::restrict_to(std::span<const std::string> ids) const {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < model_ids_.size(); ++i) {
    if (wanted.erase(model_ids_[i]) > 0) keep.push_back(i);
  }
  if (!wanted.empty()) {
    throw ValidationError("text '" + text_id_ + "': no attention row for model '" +
                          *wanted.begin() + "'");
  }
  return select_rows(keep);
}

void PredictionTable::set(const std::string& text_id, const std::string& model_id,
                          int label) {
  entries_[{text_id, model_id}] = label;
}

std::optional<int> PredictionTable::find(const std::string& text_id,
                                         const std::string& model_id) const {
  auto it = entries_.find({text_id, model_id});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const AttentionMatrix& validate_matrix(const AttentionMatrix& matrix,
                                       const TokenizedText& text) {
  if (text.tokens.empty()) {
    throw ValidationError("text '" + text.text_id + "' has no tokens");
  }
  if (matrix.text_id() != text.text_id) {
    throw ValidationError("matrix for text '" + matrix.text_id() +
                          "' checked against text '" + text.text_id + "'");
  }
  if (matrix.n_words() != text.size()) {
    throw ValidationError("text '" + text.text_id + "': dimension mismatch, rows have " +
                          std::to_string(matrix.n_words()) + " entries for " +
                          std::to_string(text.size()) + " tokens");
  }
  check_finite(matrix.data(), text.text_id);
  return matrix;
}

std::vector<std::string> compatible_inputs(const PredictionTable& predictions,
                                           std::span<const TokenizedText> texts,
                                           std::span<const ModelRecord> models) {
  std::vector<std::string> out;
  for (const auto& text : texts) {
    std::optional<int> first;
    bool unanimous = true;
    for (const auto& model : models) {
      auto label = predictions.find(text.text_id, model.model_id);
      if (!label) {
        throw ValidationError("missing prediction for text '" + text.text_id +
                              "' and model '" + model.model_id + "'");
      }
      if (!first) {
        first = label;
      } else if (*first != *label) {
        unanimous = false;
      }
    }
    if (unanimous) out.push_back(text.text_id);
  }
  return out;
}

}  // namespace xsnr
