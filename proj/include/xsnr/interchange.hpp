#pragma once

// JSON interchange files (one self-contained document per text), ensemble
// manifests, standalone attention maps and CSV export.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsnr/core.hpp"

namespace xsnr {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ModelExplanation {
  ModelRecord record;
  std::optional<int> prediction;
  std::vector<double> attention;

  friend bool operator==(const ModelExplanation&, const ModelExplanation&) = default;
};

/// `{schema_version, text_id, tokens, label, models}`: a text plus every
/// model's prediction and attention row for it.
struct TextDocument {
  TokenizedText text;
  std::vector<ModelExplanation> models;

  /// Attention rows of all models, validated against the tokens.
  AttentionMatrix attention_matrix() const;
  PredictionTable prediction_table() const;
  std::vector<ModelRecord> model_records() const;

  /// Copy of this document whose attention rows are taken from `matrix`
  /// (matched by model id).
  TextDocument with_attention(const AttentionMatrix& matrix) const;

  friend bool operator==(const TextDocument&, const TextDocument&) = default;
};

struct EnsembleManifest {
  std::vector<ModelRecord> models;

  friend bool operator==(const EnsembleManifest&, const EnsembleManifest&) = default;
};

Json to_json(const Token& token);
Json to_json(const ModelRecord& record);
Json to_json(const TextDocument& doc);
Json to_json(const EnsembleManifest& manifest);
Json to_json(const AttentionMap& map);
Json to_json(const AttentionMatrix& matrix);

TokenizedText parse_tokenized_text(const Json& j);
ModelRecord parse_model_record(const Json& j);
TextDocument parse_text_document(const Json& j);
EnsembleManifest parse_manifest(const Json& j);
AttentionMap parse_attention_map(const Json& j);
AttentionMatrix parse_attention_matrix(const Json& j);

/// Reads a JSON file; parse failures become ValidationError.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with full double precision.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// JSON-lines corpus: one interchange document per non-blank line.
std::vector<TextDocument> read_corpus(const std::filesystem::path& path);

/// RFC 4180 CSV: header row of token surfaces, one row per model.
std::string matrix_to_csv(const AttentionMatrix& matrix, const TokenizedText& text);
std::string csv_escape(const std::string& field);

}  // namespace xsnr
