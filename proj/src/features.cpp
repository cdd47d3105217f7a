#include "xsnr/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "xsnr/interchange.hpp"

namespace xsnr {

// ---------------------------------------------------------------------------
// Feature specs

FeatureKind FeatureSpec::kind() const {
  return std::holds_alternative<GlobalStatistic>(rule) ? FeatureKind::kGlobal
                                                       : FeatureKind::kTokenRatio;
}

bool FeatureSpec::needs_annotations() const {
  return std::holds_alternative<TagMatcher>(rule);
}

bool FeatureSpec::matches(const Token& token) const {
  if (const auto* tag = std::get_if<TagMatcher>(&rule)) {
    if (!token.annotations) {
      throw ValidationError("feature '" + feature_id + "' needs token annotations, token '" +
                            token.surface + "' has none");
    }
    for (const auto& t : tag->tags) {
      if (token.annotations->contains(t)) return true;
    }
    return false;
  }
  if (const auto* lexicon = std::get_if<LexiconMatcher>(&rule)) {
    return lexicon->terms.contains(token.normalized);
  }
  if (const auto* regex = std::get_if<RegexMatcher>(&rule)) {
    return std::regex_search(token.normalized, *regex->compiled);
  }
  if (const auto* length = std::get_if<LengthMatcher>(&rule)) {
    return utf8_length(token.surface) >= length->min_chars;
  }
  return false;
}

FeatureSpec make_tag_feature(std::string id, std::set<std::string> tags) {
  return {std::move(id), TagMatcher{std::move(tags)}};
}

FeatureSpec make_lexicon_feature(std::string id, std::set<std::string> terms) {
  std::set<std::string> normalized;
  for (const auto& t : terms) normalized.insert(normalize_surface(t));
  return {std::move(id), LexiconMatcher{std::move(normalized)}};
}

FeatureSpec make_regex_feature(std::string id, std::string pattern) {
  std::shared_ptr<const std::regex> compiled;
  try {
    compiled = std::make_shared<const std::regex>(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw ValidationError("feature '" + id + "': bad regex '" + pattern + "': " + e.what());
  }
  return {std::move(id), RegexMatcher{std::move(pattern), std::move(compiled)}};
}

FeatureSpec make_length_feature(std::string id, std::size_t min_chars) {
  if (min_chars < 1) throw ValidationError("feature '" + id + "': min_chars must be >= 1");
  return {std::move(id), LengthMatcher{min_chars}};
}

FeatureSpec make_global_feature(std::string id, GlobalStatistic statistic) {
  return {std::move(id), statistic};
}

// ---------------------------------------------------------------------------
// Registry

namespace {

constexpr const char* kCttrName = "corrected_type_token_ratio";
constexpr const char* kMeanLengthName = "mean_word_length";

nlohmann::json spec_to_json(const FeatureSpec& spec) {
  nlohmann::json j = {{"feature_id", spec.feature_id}};
  if (const auto* stat = std::get_if<GlobalStatistic>(&spec.rule)) {
    j["kind"] = "global";
    j["statistic"] =
        *stat == GlobalStatistic::kCorrectedTypeTokenRatio ? kCttrName : kMeanLengthName;
    return j;
  }
  j["kind"] = "token_ratio";
  if (const auto* tag = std::get_if<TagMatcher>(&spec.rule)) {
    j["matcher"] = {{"type", "tag"}, {"tags", tag->tags}};
  } else if (const auto* lexicon = std::get_if<LexiconMatcher>(&spec.rule)) {
    j["matcher"] = {{"type", "lexicon"}, {"terms", lexicon->terms}};
  } else if (const auto* regex = std::get_if<RegexMatcher>(&spec.rule)) {
    j["matcher"] = {{"type", "regex"}, {"pattern", regex->pattern}};
  } else if (const auto* length = std::get_if<LengthMatcher>(&spec.rule)) {
    j["matcher"] = {{"type", "min_length"}, {"chars", length->min_chars}};
  }
  return j;
}

FeatureSpec spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("feature_id") || !j.contains("kind")) {
    throw ValidationError("feature spec needs 'feature_id' and 'kind'");
  }
  auto id = j.at("feature_id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "global") {
    const auto stat = j.value("statistic", std::string{});
    if (stat == kCttrName) return make_global_feature(id, GlobalStatistic::kCorrectedTypeTokenRatio);
    if (stat == kMeanLengthName) return make_global_feature(id, GlobalStatistic::kMeanWordLength);
    throw ValidationError("feature '" + id + "': unknown global statistic '" + stat + "'");
  }
  if (kind != "token_ratio") {
    throw ValidationError("feature '" + id + "': unknown kind '" + kind + "'");
  }
  if (!j.contains("matcher")) throw ValidationError("feature '" + id + "': missing matcher");
  const auto& m = j.at("matcher");
  const auto type = m.value("type", std::string{});
  try {
    if (type == "tag") {
      return make_tag_feature(id, m.at("tags").get<std::set<std::string>>());
    }
    if (type == "lexicon") {
      std::set<std::string> terms;
      if (m.contains("terms")) terms = m.at("terms").get<std::set<std::string>>();
      if (m.contains("path")) {
        auto more = load_lexicon(base_dir / m.at("path").get<std::string>());
        terms.insert(more.begin(), more.end());
      }
      if (terms.empty()) throw ValidationError("feature '" + id + "': empty lexicon");
      return make_lexicon_feature(id, std::move(terms));
    }
    if (type == "regex") return make_regex_feature(id, m.at("pattern").get<std::string>());
    if (type == "min_length") return make_length_feature(id, m.at("chars").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("feature '" + id + "': " + e.what());
  }
  throw ValidationError("feature '" + id + "': unknown matcher type '" + type + "'");
}

}  // namespace

FeatureRegistry::FeatureRegistry(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {
  std::unordered_set<std::string> ids;
  for (const auto& s : specs_) {
    if (s.feature_id.empty()) throw ValidationError("feature id must not be empty");
    if (!ids.insert(s.feature_id).second) {
      throw ValidationError("duplicate feature id '" + s.feature_id + "'");
    }
  }
}

nlohmann::json FeatureRegistry::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : specs_) j.push_back(spec_to_json(s));
  return j;
}

std::string FeatureRegistry::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureRegistry FeatureRegistry::from_json(const nlohmann::json& j,
                                           const std::filesystem::path& base_dir) {
  if (!j.is_array()) throw ValidationError("feature registry must be a JSON list");
  std::vector<FeatureSpec> specs;
  for (const auto& item : j) specs.push_back(spec_from_json(item, base_dir));
  return FeatureRegistry(std::move(specs));
}

FeatureRegistry FeatureRegistry::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

std::set<std::string> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open lexicon '" + path.string() + "'");
  std::set<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    terms.insert(normalize_surface(line.substr(start)));
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

void check_annotations(const TokenizedText& text, const FeatureRegistry& registry) {
  const bool needed = std::any_of(registry.specs().begin(), registry.specs().end(),
                                  [](const FeatureSpec& s) { return s.needs_annotations(); });
  if (!needed) return;
  for (std::size_t j = 0; j < text.size(); ++j) {
    if (!text.tokens[j].annotations) {
      throw ValidationError("text '" + text.text_id + "': token " + std::to_string(j) +
                            " lacks the annotations required by tag features");
    }
  }
}

}  // namespace

FeatureVector extract_features(const TokenizedText& text, const FeatureRegistry& registry) {
  if (text.tokens.empty()) throw ValidationError("text '" + text.text_id + "' is empty");
  check_annotations(text, registry);
  const auto total = static_cast<double>(text.size());
  FeatureVector out{text.text_id, {}};
  out.values.reserve(registry.size());
  for (const auto& spec : registry.specs()) {
    if (const auto* stat = std::get_if<GlobalStatistic>(&spec.rule)) {
      if (*stat == GlobalStatistic::kCorrectedTypeTokenRatio) {
        std::set<std::string> types;
        for (const auto& t : text.tokens) types.insert(t.normalized);
        out.values.push_back(static_cast<double>(types.size()) / std::sqrt(2.0 * total));
      } else {
        std::size_t chars = 0;
        for (const auto& t : text.tokens) chars += utf8_length(t.surface);
        out.values.push_back(static_cast<double>(chars) / total);
      }
      continue;
    }
    std::size_t hits = 0;
    for (const auto& t : text.tokens) hits += spec.matches(t) ? 1 : 0;
    out.values.push_back(static_cast<double>(hits) / total);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear_term(std::span<const double> x, std::span<const double> w, double b) {
  double z = b;
  for (std::size_t f = 0; f < w.size(); ++f) z += w[f] * x[f];
  return z;
}

// Gradient layout: coefficients followed by the intercept.
double loss_and_gradient(const Design& d, std::span<const double> w, double b, double lambda,
                         std::vector<double>& grad) {
  const std::size_t p = w.size();
  grad.assign(p + 1, 0.0);
  double data_loss = 0.0;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const double z = linear_term(d.rows[i], w, b);
    data_loss += softplus(z) - d.labels[i] * z;
    const double residual = sigmoid(z) - d.labels[i];
    for (std::size_t f = 0; f < p; ++f) grad[f] += residual * d.rows[i][f];
    grad[p] += residual;
  }
  const auto n = static_cast<double>(d.rows.size());
  double penalty = 0.0;
  for (std::size_t f = 0; f < p; ++f) {
    grad[f] = grad[f] / n + lambda * w[f];
    penalty += w[f] * w[f];
  }
  grad[p] /= n;
  return data_loss / n + 0.5 * lambda * penalty;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double regularized_logistic_loss(const Design& design, std::span<const double> coefficients,
                                 double intercept, double lambda) {
  double data_loss = 0.0;
  for (std::size_t i = 0; i < design.rows.size(); ++i) {
    const double z = linear_term(design.rows[i], coefficients, intercept);
    data_loss += softplus(z) - design.labels[i] * z;
  }
  double penalty = 0.0;
  for (double w : coefficients) penalty += w * w;
  return data_loss / static_cast<double>(design.rows.size()) + 0.5 * lambda * penalty;
}

LogisticFit fit_logistic(const Design& design, double lambda, const TrainOptions& options) {
  if (design.rows.empty()) throw ValidationError("logistic fit: empty design");
  if (!(lambda > 0.0)) throw ValidationError("logistic fit: lambda must be positive");
  const std::size_t p = design.rows.front().size();

  // Upper bound on the Hessian's largest eigenvalue; 1/bound is a step that
  // always decreases the loss, used as the floor of the line search.
  double curvature = 0.0;
  for (const auto& row : design.rows) {
    double sq = 1.0;
    for (double x : row) sq += x * x;
    curvature += 0.25 * sq;
  }
  curvature = curvature / static_cast<double>(design.rows.size()) + lambda;
  const double min_step = 1.0 / curvature;

  std::vector<double> w(p, 0.0), grad, trial_w(p), trial_grad;
  double b = 0.0;
  double loss = loss_and_gradient(design, w, b, lambda, grad);
  double step = min_step;
  constexpr double kArmijo = 1e-4;

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const double gnorm = norm(grad);
    if (gnorm <= options.gradient_tolerance) {
      return {w, b, loss, gnorm, iter};
    }
    step = std::max(step * 2.0, min_step);
    double trial_loss = 0.0;
    double trial_b = 0.0;
    while (true) {
      for (std::size_t f = 0; f < p; ++f) trial_w[f] = w[f] - step * grad[f];
      trial_b = b - step * grad[p];
      trial_loss = loss_and_gradient(design, trial_w, trial_b, lambda, trial_grad);
      if (trial_loss <= loss - kArmijo * step * gnorm * gnorm || step <= min_step) break;
      step = std::max(step / 2.0, min_step);
    }
    w.swap(trial_w);
    b = trial_b;
    loss = trial_loss;
    grad.swap(trial_grad);
  }
  const double gnorm = norm(grad);
  if (gnorm <= options.gradient_tolerance) {
    return {w, b, loss, gnorm, options.max_iterations};
  }
  throw ConvergenceError("logistic fit did not converge within " +
                             std::to_string(options.max_iterations) +
                             " iterations (gradient norm " + std::to_string(gnorm) + ")",
                         gnorm);
}

// ---------------------------------------------------------------------------
// Training and prediction

std::vector<double> FeatureModel::standardize(const FeatureVector& features) const {
  if (features.values.size() != standardization.size()) {
    throw ValidationError("feature vector for '" + features.text_id + "' has " +
                          std::to_string(features.values.size()) + " values, model expects " +
                          std::to_string(standardization.size()));
  }
  std::vector<double> out(features.values.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = (features.values[f] - standardization[f].mean) / standardization[f].std;
  }
  return out;
}

Prediction predict(const FeatureModel& model, const FeatureVector& features) {
  const auto x = model.standardize(features);
  const double p = sigmoid(linear_term(x, model.coefficients, model.intercept));
  return {p >= 0.5 ? 1 : 0, p};
}

double accuracy(const FeatureModel& model, std::span<const LabeledVector> data) {
  if (data.empty()) throw ValidationError("accuracy of an empty data set");
  std::size_t correct = 0;
  for (const auto& item : data) {
    correct += predict(model, item.features).label == item.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

FeatureModel train(const FeatureRegistry& registry, std::span<const LabeledVector> train_set,
                   std::span<const double> lambda_grid,
                   std::span<const LabeledVector> validation_set, const TrainOptions& options) {
  if (lambda_grid.empty()) throw ValidationError("train: empty lambda grid");
  if (train_set.empty()) throw ValidationError("train: empty training set");
  if (validation_set.empty()) throw ValidationError("train: empty validation set");
  const std::size_t p = registry.size();
  bool has0 = false, has1 = false;
  for (const auto& item : train_set) {
    if (item.features.values.size() != p) {
      throw ValidationError("train: feature vector for '" + item.features.text_id +
                            "' does not match the registry");
    }
    if (item.label != 0 && item.label != 1) throw ValidationError("train: labels must be 0 or 1");
    (item.label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw ValidationError("train: both classes must be present");

  // Canonical row order: by feature values, then label.
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& va = train_set[a].features.values;
    const auto& vb = train_set[b].features.values;
    if (va != vb) return va < vb;
    return train_set[a].label < train_set[b].label;
  });

  FeatureModel model;
  model.registry = registry;
  model.standardization.resize(p);
  const auto n = static_cast<double>(order.size());
  for (std::size_t f = 0; f < p; ++f) {
    double sum = 0.0;
    for (std::size_t i : order) sum += train_set[i].features.values[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i : order) {
      const double d = train_set[i].features.values[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      throw ValidationError("train: feature '" + registry[f].feature_id +
                            "' is constant on the training set");
    }
    model.standardization[f] = {mean, sd};
  }

  Design design;
  for (std::size_t i : order) {
    design.rows.push_back(model.standardize(train_set[i].features));
    design.labels.push_back(train_set[i].label);
  }

  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  std::sort(grid.begin(), grid.end(), std::greater<>());
  bool have_best = false;
  for (double lambda : grid) {
    if (!(lambda > 0.0)) throw ValidationError("train: lambda values must be positive");
    const LogisticFit fit = fit_logistic(design, lambda, options);
    FeatureModel candidate = model;
    candidate.coefficients = fit.coefficients;
    candidate.intercept = fit.intercept;
    candidate.lambda = lambda;
    candidate.final_gradient_norm = fit.gradient_norm;
    candidate.iterations = fit.iterations;
    candidate.validation_accuracy = accuracy(candidate, validation_set);
    // grid is descending, so strict improvement keeps the largest lambda on ties
    if (!have_best || candidate.validation_accuracy > model.validation_accuracy) {
      model = std::move(candidate);
      have_best = true;
    }
  }
  return model;
}

AttentionMap linguistic_attention_map(const FeatureModel& model, const TokenizedText& text,
                                      bool l1_rescale) {
  if (model.coefficients.size() != model.registry.size()) {
    throw ValidationError("feature model: coefficient count does not match registry");
  }
  check_annotations(text, model.registry);
  AttentionMap map{text.text_id, std::string(kFeatureModelId),
                   std::vector<double>(text.size(), 0.0)};
  for (std::size_t j = 0; j < text.size(); ++j) {
    for (std::size_t f = 0; f < model.registry.size(); ++f) {
      const auto& spec = model.registry[f];
      if (spec.kind() == FeatureKind::kTokenRatio && spec.matches(text.tokens[j])) {
        map.weights[j] += std::abs(model.coefficients[f]);
      }
    }
  }
  if (l1_rescale) {
    double mass = 0.0;
    for (double w : map.weights) mass += std::abs(w);
    if (mass > 0.0) {
      for (double& w : map.weights) w /= mass;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json FeatureModel::to_json() const {
  nlohmann::json stdz = nlohmann::json::array();
  for (const auto& s : standardization) stdz.push_back({{"mean", s.mean}, {"std", s.std}});
  return {{"schema_version", kSchemaVersion},
          {"registry_hash", registry.hash()},
          {"registry", registry.to_json()},
          {"standardization", std::move(stdz)},
          {"coefficients", coefficients},
          {"intercept", intercept},
          {"lambda", lambda},
          {"validation_accuracy", validation_accuracy},
          {"final_gradient_norm", final_gradient_norm},
          {"iterations", iterations}};
}

FeatureModel FeatureModel::from_json(const nlohmann::json& j) {
  FeatureModel model;
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ValidationError("feature model: unsupported schema_version");
    }
    model.registry = FeatureRegistry::from_json(j.at("registry"));
    if (model.registry.hash() != j.at("registry_hash").get<std::string>()) {
      throw ValidationError("feature model: registry hash mismatch");
    }
    for (const auto& s : j.at("standardization")) {
      model.standardization.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
    }
    model.coefficients = j.at("coefficients").get<std::vector<double>>();
    model.intercept = j.at("intercept").get<double>();
    model.lambda = j.at("lambda").get<double>();
    model.validation_accuracy = j.value("validation_accuracy", 0.0);
    model.final_gradient_norm = j.value("final_gradient_norm", 0.0);
    model.iterations = j.value("iterations", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("feature model: ") + e.what());
  }
  if (model.coefficients.size() != model.registry.size() ||
      model.standardization.size() != model.registry.size()) {
    throw ValidationError("feature model: coefficient count does not match registry");
  }
  for (const auto& s : model.standardization) {
    if (!(s.std > 0.0)) throw ValidationError("feature model: non-positive standard deviation");
  }
  return model;
}

}  // namespace xsnr
