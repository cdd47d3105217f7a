#include "xsnr/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "xsnr/rng.hpp"
#include "xsnr/stats.hpp"

namespace xsnr {

void SyntheticSpec::validate() const {
  if (n_words < 2) throw ValidationError("synthetic: n_words must be >= 2");
  if (m_models < 2) throw ValidationError("synthetic: m_models must be >= 2");
  if (const auto* mu = std::get_if<std::vector<double>>(&means)) {
    if (mu->size() != n_words) throw ValidationError("synthetic: means must have n_words entries");
    for (double v : *mu) {
      if (!std::isfinite(v)) throw ValidationError("synthetic: non-finite mean");
    }
  } else if (!(std::get<MeanGenerator>(means).spread >= 0.0)) {
    throw ValidationError("synthetic: mean spread must be >= 0");
  }
  if (const auto* sd = std::get_if<double>(&noise_sd)) {
    if (!(*sd >= 0.0) || !std::isfinite(*sd)) throw ValidationError("synthetic: sigma must be >= 0");
  } else {
    const auto& sds = std::get<std::vector<double>>(noise_sd);
    if (sds.size() != n_words) throw ValidationError("synthetic: noise_sd must have n_words entries");
    for (double v : sds) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("synthetic: sigma must be >= 0");
    }
  }
  if (sparse_k && (*sparse_k < 1 || *sparse_k > n_words)) {
    throw ValidationError("synthetic: sparse k must lie in [1, n_words]");
  }
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.n_words = j.at("n_words").get<std::size_t>();
    spec.m_models = j.at("m_models").get<std::size_t>();
    const auto& means = j.at("means");
    if (means.is_array()) {
      spec.means = means.get<std::vector<double>>();
    } else {
      spec.means = MeanGenerator{means.at("spread").get<double>()};
    }
    const auto& sd = j.at("noise_sd");
    if (sd.is_array()) {
      spec.noise_sd = sd.get<std::vector<double>>();
    } else {
      spec.noise_sd = sd.get<double>();
    }
    const auto mode = j.value("support_mode", std::string("dense"));
    if (mode == "sparse") {
      spec.sparse_k = j.at("k_per_model").get<std::size_t>();
    } else if (mode != "dense") {
      throw ValidationError("synthetic: unknown support_mode '" + mode + "'");
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.text_id = j.value("text_id", std::string("synthetic"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json j = {{"n_words", n_words}, {"m_models", m_models}, {"seed", seed},
                      {"text_id", text_id}};
  if (const auto* mu = std::get_if<std::vector<double>>(&means)) {
    j["means"] = *mu;
  } else {
    j["means"] = {{"spread", std::get<MeanGenerator>(means).spread}};
  }
  if (const auto* sd = std::get_if<double>(&noise_sd)) {
    j["noise_sd"] = *sd;
  } else {
    j["noise_sd"] = std::get<std::vector<double>>(noise_sd);
  }
  j["support_mode"] = sparse_k ? "sparse" : "dense";
  if (sparse_k) j["k_per_model"] = *sparse_k;
  return j;
}

nlohmann::json SyntheticTruth::to_json() const {
  nlohmann::json j = {{"true_signal", true_signal},
                      {"true_noise", true_noise},
                      {"monte_carlo_only", monte_carlo_only},
                      {"means", means}};
  if (std::isinf(true_snr)) {
    j["true_snr"] = "infinite";
  } else {
    j["true_snr"] = true_snr;
  }
  return j;
}

SyntheticEnsemble generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_words;
  const std::size_t m = spec.m_models;
  SplitMix64 rng(spec.seed);

  std::vector<double> mu;
  if (const auto* explicit_mu = std::get_if<std::vector<double>>(&spec.means)) {
    mu = *explicit_mu;
  } else {
    const double spread = std::get<MeanGenerator>(spec.means).spread;
    mu.resize(n);
    for (auto& v : mu) v = spread * rng.normal();
  }
  std::vector<double> sigma(n);
  if (const auto* sd = std::get_if<double>(&spec.noise_sd)) {
    sigma.assign(n, *sd);
  } else {
    sigma = std::get<std::vector<double>>(spec.noise_sd);
  }

  std::vector<double> values(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = values.data() + i * n;
    if (spec.sparse_k) {
      for (std::size_t j : random_subset(n, *spec.sparse_k, rng)) {
        row[j] = mu[j] + sigma[j] * rng.normal();
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) row[j] = mu[j] + sigma[j] * rng.normal();
    }
  }

  std::vector<std::string> ids(m);
  for (std::size_t i = 0; i < m; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "model_%03zu", i);
    ids[i] = buf;
  }

  SyntheticTruth truth;
  truth.true_signal = stats::sample_variance(mu);
  double noise = 0.0;
  for (double s : sigma) noise += s * s;
  truth.true_noise = noise / static_cast<double>(n);
  truth.true_snr = truth.true_noise > 0.0 ? truth.true_signal / truth.true_noise
                                          : std::numeric_limits<double>::infinity();
  truth.monte_carlo_only = spec.sparse_k.has_value();
  truth.means = std::move(mu);

  return {AttentionMatrix(spec.text_id, std::move(ids), n, std::move(values)), std::move(truth)};
}

TextDocument to_document(const AttentionMatrix& matrix) {
  TextDocument doc;
  doc.text.text_id = matrix.text_id();
  for (std::size_t j = 0; j < matrix.n_words(); ++j) {
    doc.text.tokens.emplace_back("w" + std::to_string(j));
  }
  for (std::size_t i = 0; i < matrix.n_models(); ++i) {
    ModelExplanation e;
    e.record.model_id = matrix.model_ids()[i];
    e.record.seed = static_cast<std::int64_t>(i);
    e.record.accuracy = 1.0;
    e.record.n_test = 1;
    auto r = matrix.row(i);
    e.attention.assign(r.begin(), r.end());
    doc.models.push_back(std::move(e));
  }
  return doc;
}

std::vector<double> standardized(std::vector<double> values, double variance) {
  const double mean = stats::mean(values);
  const double scale = std::sqrt(variance / stats::sample_variance(values));
  for (auto& v : values) v = (v - mean) * scale;
  return values;
}

}  // namespace xsnr
