#include "xsnr/interchange.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace xsnr {

namespace {

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

void check_schema_version(const Json& j, const std::string& where) {
  const Json& v = require(j, "schema_version", where);
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw ValidationError(where + ": unsupported schema_version " + v.dump());
  }
}

std::vector<double> parse_weights(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": weights must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    // nlohmann writes NaN/inf as null
    if (!v.is_number()) {
      throw ValidationError(where + ": non-finite or non-numeric weight");
    }
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(where + ": non-finite weight");
    out.push_back(x);
  }
  return out;
}

std::optional<int> parse_label(const Json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number_integer()) {
    throw ValidationError(where + ": class label must be an integer or null");
  }
  int label = j.get<int>();
  if (label != 0 && label != 1) {
    throw ValidationError(where + ": class label must be 0 or 1");
  }
  return label;
}

Json label_json(const std::optional<int>& label) {
  return label ? Json(*label) : Json(nullptr);
}

}  // namespace

Json to_json(const Token& token) {
  Json j = {{"surface", token.surface}};
  if (token.annotations) {
    j["annotations"] = Json::array();
    for (const auto& tag : *token.annotations) j["annotations"].push_back(tag);
  }
  return j;
}

Json to_json(const ModelRecord& record) {
  return {{"model_id", record.model_id},
          {"seed", record.seed},
          {"accuracy", record.accuracy},
          {"n_test", record.n_test}};
}

Json to_json(const TextDocument& doc) {
  Json tokens = Json::array();
  for (const auto& t : doc.text.tokens) tokens.push_back(to_json(t));
  Json models = Json::array();
  for (const auto& m : doc.models) {
    Json entry = to_json(m.record);
    entry["prediction"] = label_json(m.prediction);
    entry["attention"] = m.attention;
    models.push_back(std::move(entry));
  }
  return {{"schema_version", kSchemaVersion},
          {"text_id", doc.text.text_id},
          {"tokens", std::move(tokens)},
          {"label", label_json(doc.text.label)},
          {"models", std::move(models)}};
}

Json to_json(const EnsembleManifest& manifest) {
  Json models = Json::array();
  for (const auto& m : manifest.models) models.push_back(to_json(m));
  return {{"schema_version", kSchemaVersion}, {"models", std::move(models)}};
}

Json to_json(const AttentionMap& map) {
  return {{"schema_version", kSchemaVersion},
          {"text_id", map.text_id},
          {"model_id", map.model_id},
          {"weights", map.weights}};
}

Json to_json(const AttentionMatrix& matrix) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < matrix.n_models(); ++i) {
    auto r = matrix.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"schema_version", kSchemaVersion},
          {"text_id", matrix.text_id()},
          {"model_ids", matrix.model_ids()},
          {"rows", std::move(rows)}};
}

TokenizedText parse_tokenized_text(const Json& j) {
  TokenizedText text;
  const Json& id = require(j, "text_id", "document");
  if (!id.is_string()) throw ValidationError("document: text_id must be a string");
  text.text_id = id.get<std::string>();
  const std::string where = "text '" + text.text_id + "'";
  const Json& tokens = require(j, "tokens", where);
  if (!tokens.is_array()) throw ValidationError(where + ": tokens must be an array");
  for (const auto& t : tokens) {
    const Json& surface = require(t, "surface", where);
    if (!surface.is_string()) throw ValidationError(where + ": surface must be a string");
    std::optional<std::set<std::string>> tags;
    if (t.contains("annotations") && !t.at("annotations").is_null()) {
      tags.emplace();
      for (const auto& tag : t.at("annotations")) {
        if (!tag.is_string()) throw ValidationError(where + ": annotation must be a string");
        tags->insert(tag.get<std::string>());
      }
    }
    text.tokens.emplace_back(surface.get<std::string>(), std::move(tags));
  }
  text.label = j.contains("label") ? parse_label(j.at("label"), where) : std::nullopt;
  return text;
}

ModelRecord parse_model_record(const Json& j) {
  ModelRecord r;
  const Json& id = require(j, "model_id", "model record");
  if (!id.is_string()) throw ValidationError("model record: model_id must be a string");
  r.model_id = id.get<std::string>();
  const std::string where = "model '" + r.model_id + "'";
  try {
    r.seed = require(j, "seed", where).get<std::int64_t>();
    r.accuracy = require(j, "accuracy", where).get<double>();
    r.n_test = require(j, "n_test", where).get<std::int64_t>();
  } catch (const nlohmann::json::type_error& e) {
    throw ValidationError(where + ": " + e.what());
  }
  r.validate();
  return r;
}

TextDocument parse_text_document(const Json& j) {
  check_schema_version(j, "document");
  TextDocument doc;
  doc.text = parse_tokenized_text(j);
  const std::string where = "text '" + doc.text.text_id + "'";
  if (j.contains("models")) {
    const Json& models = j.at("models");
    if (!models.is_array()) throw ValidationError(where + ": models must be an array");
    std::set<std::string> seen;
    for (const auto& m : models) {
      ModelExplanation e;
      e.record = parse_model_record(m);
      if (!seen.insert(e.record.model_id).second) {
        throw ValidationError(where + ": duplicate model '" + e.record.model_id + "'");
      }
      e.prediction = m.contains("prediction") ? parse_label(m.at("prediction"), where)
                                              : std::nullopt;
      if (m.contains("attention")) {
        e.attention = parse_weights(m.at("attention"),
                                    where + ", model '" + e.record.model_id + "'");
      }
      doc.models.push_back(std::move(e));
    }
  }
  return doc;
}

EnsembleManifest parse_manifest(const Json& j) {
  check_schema_version(j, "manifest");
  EnsembleManifest manifest;
  const Json& models = require(j, "models", "manifest");
  if (!models.is_array()) throw ValidationError("manifest: models must be an array");
  for (const auto& m : models) manifest.models.push_back(parse_model_record(m));
  return manifest;
}

AttentionMap parse_attention_map(const Json& j) {
  check_schema_version(j, "attention map");
  AttentionMap map;
  map.text_id = require(j, "text_id", "attention map").get<std::string>();
  map.model_id = require(j, "model_id", "attention map").get<std::string>();
  map.weights = parse_weights(require(j, "weights", "attention map"),
                              "attention map for '" + map.text_id + "'");
  return map;
}

AttentionMatrix parse_attention_matrix(const Json& j) {
  check_schema_version(j, "attention matrix");
  auto text_id = require(j, "text_id", "attention matrix").get<std::string>();
  auto ids = require(j, "model_ids", "attention matrix").get<std::vector<std::string>>();
  std::vector<std::vector<double>> rows;
  for (const auto& r : require(j, "rows", "attention matrix")) {
    rows.push_back(parse_weights(r, "attention matrix for '" + text_id + "'"));
  }
  return AttentionMatrix(std::move(text_id), std::move(ids), rows);
}

AttentionMatrix TextDocument::attention_matrix() const {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  for (const auto& m : models) {
    ids.push_back(m.record.model_id);
    rows.push_back(m.attention);
  }
  AttentionMatrix matrix(text.text_id, std::move(ids), rows);
  validate_matrix(matrix, text);
  return matrix;
}

PredictionTable TextDocument::prediction_table() const {
  PredictionTable table;
  for (const auto& m : models) {
    if (m.prediction) table.set(text.text_id, m.record.model_id, *m.prediction);
  }
  return table;
}

std::vector<ModelRecord> TextDocument::model_records() const {
  std::vector<ModelRecord> out;
  for (const auto& m : models) out.push_back(m.record);
  return out;
}

TextDocument TextDocument::with_attention(const AttentionMatrix& matrix) const {
  validate_matrix(matrix, text);
  TextDocument out{text, {}};
  for (std::size_t i = 0; i < matrix.n_models(); ++i) {
    const std::string& id = matrix.model_ids()[i];
    ModelExplanation e;
    e.record.model_id = id;
    for (const auto& m : models) {
      if (m.record.model_id == id) {
        e.record = m.record;
        e.prediction = m.prediction;
        break;
      }
    }
    auto r = matrix.row(i);
    e.attention.assign(r.begin(), r.end());
    out.models.push_back(std::move(e));
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<TextDocument> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::vector<TextDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(parse_text_document(Json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return docs;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string matrix_to_csv(const AttentionMatrix& matrix, const TokenizedText& text) {
  validate_matrix(matrix, text);
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < text.size(); ++j) {
    if (j) os << ',';
    os << csv_escape(text.tokens[j].surface);
  }
  os << "\r\n";
  for (std::size_t i = 0; i < matrix.n_models(); ++i) {
    for (std::size_t j = 0; j < matrix.n_words(); ++j) {
      if (j) os << ',';
      os << matrix.at(i, j);
    }
    os << "\r\n";
  }
  return os.str();
}

}  // namespace xsnr
