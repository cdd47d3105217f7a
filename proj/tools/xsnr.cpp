// xsnr: command-line front end for explanation signal/noise analysis.
//
// Exit codes: 0 success, 1 validation error, 2 degenerate input.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xsnr/core.hpp"
#include "xsnr/equivalence.hpp"
#include "xsnr/features.hpp"
#include "xsnr/interchange.hpp"
#include "xsnr/metrics.hpp"
#include "xsnr/normalization.hpp"
#include "xsnr/report.hpp"
#include "xsnr/synthetic.hpp"
#include "xsnr/uncertainty.hpp"

namespace fs = std::filesystem;
using xsnr::Json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  std::size_t bootstrap = 1000;
  unsigned threads = 1;
  std::string format = "json";
  std::string out;
};

void emit(const GlobalOptions& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
  } else {
    xsnr::write_text_file(g.out, text);
  }
}

void emit_json(const GlobalOptions& g, const Json& j) { emit(g, j.dump(2) + "\n"); }

void require_format(const GlobalOptions& g, std::initializer_list<std::string_view> allowed) {
  for (auto f : allowed) {
    if (g.format == f) return;
  }
  throw xsnr::ValidationError("format '" + g.format + "' is not supported by this command");
}

/// Model ids from a subset file (`model_ids`) or a manifest (`models`).
std::vector<std::string> read_model_ids(const fs::path& path) {
  const Json j = xsnr::read_json_file(path);
  if (j.contains("model_ids")) return j.at("model_ids").get<std::vector<std::string>>();
  std::vector<std::string> ids;
  for (const auto& m : xsnr::parse_manifest(j).models) ids.push_back(m.model_id);
  return ids;
}

xsnr::TextDocument read_document(const fs::path& path, const std::string& models_path) {
  xsnr::TextDocument doc = xsnr::parse_text_document(xsnr::read_json_file(path));
  if (!models_path.empty()) {
    const auto ids = read_model_ids(models_path);
    doc = doc.with_attention(doc.attention_matrix().restrict_to(ids));
  }
  return doc;
}

std::optional<xsnr::BootstrapConfig> bootstrap_config(const GlobalOptions& g) {
  if (g.bootstrap == 0) return std::nullopt;
  return xsnr::BootstrapConfig{g.bootstrap, g.ci_level, g.seed, g.threads};
}

xsnr::NormalizationSpec parse_support(const std::string& k) {
  xsnr::NormalizationSpec spec;
  if (k == "auto") return spec;
  try {
    std::size_t pos = 0;
    const long long value = std::stoll(k, &pos);
    if (pos != k.size() || value < 1) throw std::invalid_argument(k);
    spec.support = static_cast<std::size_t>(value);
  } catch (const std::exception&) {
    throw xsnr::ValidationError("--k must be a positive integer or 'auto'");
  }
  return spec;
}

// ---------------------------------------------------------------------------

int run_equivalence(const GlobalOptions& g, const std::string& manifest_path, double threshold,
                    std::optional<std::size_t> max_size) {
  require_format(g, {"json"});
  const Json j = xsnr::read_json_file(manifest_path);
  std::vector<xsnr::ModelRecord> models;
  if (j.contains("tokens")) {
    models = xsnr::parse_text_document(j).model_records();
  } else {
    models = xsnr::parse_manifest(j).models;
  }
  const auto subset = xsnr::select_equivalent_subset(models, threshold, max_size);
  emit_json(g, {{"schema_version", xsnr::kSchemaVersion},
                {"threshold", subset.threshold},
                {"z", subset.z},
                {"a_best", subset.a_best},
                {"b_worst", subset.b_worst},
                {"n_test", models.front().n_test},
                {"m_total", models.size()},
                {"m_selected", subset.model_ids.size()},
                {"model_ids", subset.model_ids}});
  return 0;
}

int run_analyze(const GlobalOptions& g, const std::string& input, const std::string& models_path,
                const std::vector<std::size_t>& sizes, bool bias_correct) {
  require_format(g, {"json", "csv"});
  const auto doc = read_document(input, models_path);
  const auto matrix = doc.attention_matrix();
  const xsnr::EstimatorOptions options{bias_correct};
  const auto bootstrap = bootstrap_config(g);

  auto report = xsnr::sensitivity_report(matrix, options);
  if (bootstrap) xsnr::attach_bootstrap_cis(report, matrix, *bootstrap);

  std::optional<xsnr::SizeSweep> sweep;
  if (!sizes.empty()) {
    xsnr::SweepDecorator decorate;
    if (bootstrap) {
      decorate = [&](xsnr::SensitivityReport& r, const xsnr::AttentionMatrix& m) {
        xsnr::attach_bootstrap_cis(r, m, *bootstrap);
      };
    }
    sweep = xsnr::size_sweep(matrix, sizes, g.seed, options, decorate);
  }

  Json compatible = nullptr;
  const auto records = doc.model_records();
  const auto predictions = doc.prediction_table();
  if (predictions.size() == records.size()) {
    const std::vector<xsnr::TokenizedText> texts{doc.text};
    compatible = !xsnr::compatible_inputs(predictions, texts, records).empty();
  }

  if (g.format == "csv") {
    std::string csv = "m_used,signal,noise,snr,signal_lower,signal_upper,snr_lower,snr_upper\r\n";
    auto row = [&](const xsnr::SensitivityReport& r) {
      auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
      };
      csv += std::to_string(r.m_used) + ',' + num(r.signal) + ',' + num(r.noise) + ',' +
             num(r.snr) + ',' + (r.signal_ci ? num(r.signal_ci->lower) : "") + ',' +
             (r.signal_ci ? num(r.signal_ci->upper) : "") + ',' +
             (r.snr_ci ? num(r.snr_ci->lower) : "") + ',' +
             (r.snr_ci ? num(r.snr_ci->upper) : "") + "\r\n";
    };
    if (sweep) {
      for (const auto& r : sweep->reports) row(r);
    } else {
      row(report);
    }
    emit(g, csv);
    return 0;
  }

  Json out = {{"schema_version", xsnr::kSchemaVersion},
              {"text_id", doc.text.text_id},
              {"n_words", matrix.n_words()},
              {"length_bucket", xsnr::to_string(doc.text.length_bucket())},
              {"compatible", compatible},
              {"model_ids", matrix.model_ids()},
              {"report", xsnr::to_json(report)}};
  if (sweep) out["sweep"] = xsnr::to_json(*sweep);
  emit_json(g, out);
  return 0;
}

int run_normalize(const GlobalOptions& g, const std::string& input, const std::string& reference,
                  const std::string& k) {
  require_format(g, {"json", "csv"});
  const auto doc = xsnr::parse_text_document(xsnr::read_json_file(input));
  std::optional<xsnr::AttentionMap> ref;
  if (!reference.empty()) ref = xsnr::parse_attention_map(xsnr::read_json_file(reference));
  const auto spec = parse_support(k);
  const auto normalized =
      xsnr::normalize_matrix(doc.attention_matrix(), spec, ref ? &*ref : nullptr);
  if (g.format == "csv") {
    emit(g, xsnr::matrix_to_csv(normalized, doc.text));
  } else {
    emit_json(g, xsnr::to_json(doc.with_attention(normalized)));
  }
  return 0;
}

int run_boxplot(const GlobalOptions& g, const std::string& input, const std::string& map_path,
                const std::string& models_path) {
  require_format(g, {"json", "csv", "svg"});
  const auto doc = read_document(input, models_path);
  xsnr::BoxplotSummary summary;
  if (!map_path.empty()) {
    const auto map = xsnr::parse_attention_map(xsnr::read_json_file(map_path));
    if (map.text_id != doc.text.text_id || map.size() != doc.text.size()) {
      throw xsnr::ValidationError("map does not belong to text '" + doc.text.text_id + "'");
    }
    summary = xsnr::boxplot_summary(map);
  } else {
    summary = xsnr::boxplot_summary(doc.attention_matrix());
  }
  if (g.format == "csv") {
    emit(g, xsnr::boxplot_csv(summary, doc.text));
  } else if (g.format == "svg") {
    emit(g, xsnr::boxplot_svg(summary, doc.text));
  } else {
    emit_json(g, xsnr::to_json(summary, &doc.text));
  }
  return 0;
}

int run_compare(const GlobalOptions& g, const std::vector<std::string>& inputs,
                const std::vector<std::string>& feature_maps, const std::string& models_path,
                const std::vector<std::size_t>& sizes, bool normalize, const std::string& k,
                bool bias_correct) {
  require_format(g, {"json", "csv", "svg"});
  std::vector<xsnr::TokenizedText> texts;
  std::vector<xsnr::AttentionMatrix> matrices;
  for (const auto& path : inputs) {
    const auto doc = read_document(path, models_path);
    matrices.push_back(doc.attention_matrix());
    texts.push_back(doc.text);
  }
  std::vector<xsnr::AttentionMap> maps;
  for (const auto& path : feature_maps) {
    maps.push_back(xsnr::parse_attention_map(xsnr::read_json_file(path)));
  }
  xsnr::CompareOptions options;
  options.sizes = sizes;
  options.seed = g.seed;
  options.estimator.bias_correction = bias_correct;
  options.bootstrap = bootstrap_config(g);
  options.ci_level = g.ci_level;
  if (normalize) options.normalization = parse_support(k);
  const auto report = xsnr::compare(texts, matrices, maps, options);
  if (g.format == "csv") {
    emit(g, xsnr::comparison_csv(report));
  } else if (g.format == "svg") {
    emit(g, xsnr::comparison_svg(report));
  } else {
    emit_json(g, xsnr::to_json(report));
  }
  return 0;
}

std::vector<xsnr::LabeledVector> labeled_vectors(const std::vector<xsnr::TextDocument>& docs,
                                                 const xsnr::FeatureRegistry& registry,
                                                 const std::string& corpus) {
  std::vector<xsnr::LabeledVector> out;
  for (const auto& d : docs) {
    if (!d.text.label) {
      throw xsnr::ValidationError(corpus + ": text '" + d.text.text_id + "' has no label");
    }
    out.push_back({xsnr::extract_features(d.text, registry), *d.text.label});
  }
  return out;
}

int run_features_extract(const GlobalOptions& g, const std::string& registry_path,
                         const std::string& input) {
  require_format(g, {"json"});
  const auto registry = xsnr::FeatureRegistry::load(registry_path);
  std::vector<xsnr::TextDocument> docs;
  if (fs::path(input).extension() == ".jsonl") {
    docs = xsnr::read_corpus(input);
  } else {
    docs.push_back(xsnr::parse_text_document(xsnr::read_json_file(input)));
  }
  Json ids = Json::array();
  for (const auto& s : registry.specs()) ids.push_back(s.feature_id);
  Json vectors = Json::array();
  for (const auto& d : docs) {
    const auto v = xsnr::extract_features(d.text, registry);
    vectors.push_back({{"text_id", v.text_id}, {"values", v.values}});
  }
  emit_json(g, {{"schema_version", xsnr::kSchemaVersion},
                {"registry_hash", registry.hash()},
                {"feature_ids", std::move(ids)},
                {"vectors", std::move(vectors)}});
  return 0;
}

int run_features_train(const GlobalOptions& g, const std::string& registry_path,
                       const std::string& train_path, const std::string& validation_path,
                       const std::vector<double>& grid) {
  require_format(g, {"json"});
  const auto registry = xsnr::FeatureRegistry::load(registry_path);
  const auto train_set = labeled_vectors(xsnr::read_corpus(train_path), registry, train_path);
  const auto validation =
      labeled_vectors(xsnr::read_corpus(validation_path), registry, validation_path);
  const auto model = xsnr::train(registry, train_set, grid, validation);
  std::cerr << "lambda=" << model.lambda << " validation_accuracy=" << model.validation_accuracy
            << " gradient_norm=" << model.final_gradient_norm << "\n";
  emit_json(g, model.to_json());
  return 0;
}

int run_features_explain(const GlobalOptions& g, const std::string& model_path,
                         const std::string& input, bool no_rescale) {
  require_format(g, {"json"});
  const auto model = xsnr::FeatureModel::from_json(xsnr::read_json_file(model_path));
  const auto doc = xsnr::parse_text_document(xsnr::read_json_file(input));
  emit_json(g, xsnr::to_json(xsnr::linguistic_attention_map(model, doc.text, !no_rescale)));
  return 0;
}

int run_synth(const GlobalOptions& g, const std::string& spec_path, const std::string& truth_path) {
  require_format(g, {"json"});
  const auto spec = xsnr::SyntheticSpec::from_json(xsnr::read_json_file(spec_path));
  const auto ensemble = xsnr::generate(spec);
  emit_json(g, xsnr::to_json(xsnr::to_document(ensemble.matrix)));
  if (!truth_path.empty()) xsnr::write_json_file(truth_path, ensemble.truth.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal, noise and SNR of word-level explanations across equivalent models"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed for permutations and bootstrap");
  app.add_option("--ci-level", g.ci_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  app.add_option("--bootstrap", g.bootstrap, "Bootstrap replicates (0 disables intervals)");
  app.add_option("--threads", g.threads, "Bootstrap worker threads (0 = all cores)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  app.add_option("--out", g.out, "Output file (default: stdout)");

  // equivalence
  auto* eq = app.add_subcommand("equivalence", "Select the equivalent-model subset");
  eq->fallthrough();
  std::string manifest;
  double threshold = xsnr::kDefaultZThreshold;
  std::optional<std::size_t> max_size;
  eq->add_option("--manifest", manifest, "Ensemble manifest or interchange file")
      ->required()->check(CLI::ExistingFile);
  eq->add_option("--threshold", threshold, "Z threshold");
  eq->add_option("--max-size", max_size, "Cap on the subset size");

  // analyze
  auto* an = app.add_subcommand("analyze", "Signal, noise and SNR for one text");
  an->fallthrough();
  std::string input, models_path;
  std::vector<std::size_t> sizes;
  bool bias_correct = false;
  an->add_option("--input", input, "Interchange file")->required()->check(CLI::ExistingFile);
  an->add_option("--models", models_path, "Subset or manifest restricting the models")
      ->check(CLI::ExistingFile);
  an->add_option("--sizes", sizes, "Ensemble sizes for the sweep")->delimiter(',');
  an->add_flag("--bias-correct", bias_correct, "Also report signal - noise / m'");

  // normalize
  auto* no = app.add_subcommand("normalize", "Support/scale normalization of explanations");
  no->fallthrough();
  std::string reference, k = "auto";
  no->add_option("--input", input, "Interchange file")->required()->check(CLI::ExistingFile);
  no->add_option("--reference", reference, "Reference attention map (for --k auto)")
      ->check(CLI::ExistingFile);
  no->add_option("--k", k, "Support size or 'auto'");

  // boxplot
  auto* bp = app.add_subcommand("boxplot", "Per-word box-plot summary");
  bp->fallthrough();
  std::string map_path;
  bp->add_option("--input", input, "Interchange file")->required()->check(CLI::ExistingFile);
  bp->add_option("--map", map_path, "Summarize a single attention map instead")
      ->check(CLI::ExistingFile);
  bp->add_option("--models", models_path, "Subset or manifest restricting the models")
      ->check(CLI::ExistingFile);

  // compare
  auto* cmp = app.add_subcommand("compare", "Ensemble vs feature-model comparison");
  cmp->fallthrough();
  std::vector<std::string> inputs, feature_maps;
  bool normalize = false;
  cmp->add_option("--inputs", inputs, "Interchange files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--feature-maps", feature_maps, "Feature-model attention maps")
      ->required()->check(CLI::ExistingFile);
  cmp->add_option("--models", models_path, "Subset or manifest restricting the models")
      ->check(CLI::ExistingFile);
  cmp->add_option("--sizes", sizes, "Ensemble sizes for the sweep")->delimiter(',');
  cmp->add_flag("--normalize", normalize, "Add the normalized variant");
  cmp->add_option("--k", k, "Support size or 'auto' (feature map non-zeros)");
  cmp->add_flag("--bias-correct", bias_correct, "Also report signal - noise / m'");

  // features
  auto* fe = app.add_subcommand("features", "Feature-based baseline model");
  fe->require_subcommand(1);
  fe->fallthrough();
  std::string registry_path, train_path, validation_path, model_path;
  std::vector<double> grid{0.001, 0.01, 0.1, 1.0};
  bool no_rescale = false;
  auto* fx = fe->add_subcommand("extract", "Feature vectors for a text or .jsonl corpus");
  fx->fallthrough();
  fx->add_option("--registry", registry_path, "Feature registry")->required()->check(CLI::ExistingFile);
  fx->add_option("--input", input, "Interchange file or .jsonl corpus")
      ->required()->check(CLI::ExistingFile);
  auto* ft = fe->add_subcommand("train", "Grid-searched logistic regression");
  ft->fallthrough();
  ft->add_option("--registry", registry_path, "Feature registry")->required()->check(CLI::ExistingFile);
  ft->add_option("--train", train_path, "Training corpus (.jsonl)")->required()->check(CLI::ExistingFile);
  ft->add_option("--validation", validation_path, "Validation corpus (.jsonl)")
      ->required()->check(CLI::ExistingFile);
  ft->add_option("--lambda-grid", grid, "Regularization strengths")->delimiter(',');
  auto* fxp = fe->add_subcommand("explain", "Linguistic attention map for a text");
  fxp->fallthrough();
  fxp->add_option("--model", model_path, "Trained model")->required()->check(CLI::ExistingFile);
  fxp->add_option("--input", input, "Interchange file")->required()->check(CLI::ExistingFile);
  fxp->add_flag("--no-rescale", no_rescale, "Keep raw coefficient sums");

  // synth
  auto* sy = app.add_subcommand("synth", "Synthetic ensemble with known truth");
  sy->fallthrough();
  std::string spec_path, truth_path;
  sy->add_option("--spec", spec_path, "Synthetic spec")->required()->check(CLI::ExistingFile);
  sy->add_option("--truth", truth_path, "Where to write the truth record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*eq) return run_equivalence(g, manifest, threshold, max_size);
    if (*an) return run_analyze(g, input, models_path, sizes, bias_correct);
    if (*no) return run_normalize(g, input, reference, k);
    if (*bp) return run_boxplot(g, input, map_path, models_path);
    if (*cmp) {
      return run_compare(g, inputs, feature_maps, models_path, sizes, normalize, k, bias_correct);
    }
    if (*fx) return run_features_extract(g, registry_path, input);
    if (*ft) return run_features_train(g, registry_path, train_path, validation_path, grid);
    if (*fxp) return run_features_explain(g, model_path, input, no_rescale);
    if (*sy) return run_synth(g, spec_path, truth_path);
  } catch (const xsnr::DegenerateInputError& e) {
    std::cerr << "xsnr: degenerate input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xsnr: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
