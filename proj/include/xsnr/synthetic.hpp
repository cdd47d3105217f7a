#pragma once

// Explanation ensembles with known signal and noise.
//
// Dense mode:  A[i][j] = mu_j + eps_ij, eps_ij ~ N(0, sigma_j^2) i.i.d.
// Sparse mode: each model draws a uniform k-subset of words; those entries
//              follow the dense law, every other entry is 0.
//
// Draw order from SplitMix64(seed) (see rng.hpp), fixed so matrices are
// reproducible: generated means mu_0..mu_{n-1} first; then per model i,
// in sparse mode the k-subset followed by eps for the chosen words in
// ascending word order, in dense mode eps_i0..eps_i{n-1}.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xsnr/core.hpp"
#include "xsnr/interchange.hpp"

namespace xsnr {

/// mu_j ~ N(0, spread^2).
struct MeanGenerator {
  double spread = 1.0;
};

struct SyntheticSpec {
  std::size_t n_words = 2;
  std::size_t m_models = 2;
  std::variant<std::vector<double>, MeanGenerator> means = MeanGenerator{};
  /// Homoscedastic sigma or one sigma per word.
  std::variant<double, std::vector<double>> noise_sd = 1.0;
  /// Sparse support size per model; nullopt = dense.
  std::optional<std::size_t> sparse_k;
  std::uint64_t seed = 0;
  std::string text_id = "synthetic";

  void validate() const;

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SyntheticTruth {
  /// Unbiased sample variance of the realized mean vector.
  double true_signal = 0.0;
  /// Mean of sigma_j^2.
  double true_noise = 0.0;
  /// true_signal / true_noise (+infinity when noise is zero).
  double true_snr = 0.0;
  /// Set in sparse mode: the values above describe the dense generating
  /// law only; the estimators' targets are known by simulation alone.
  bool monte_carlo_only = false;
  std::vector<double> means;

  nlohmann::json to_json() const;
};

struct SyntheticEnsemble {
  AttentionMatrix matrix;
  SyntheticTruth truth;
};

SyntheticEnsemble generate(const SyntheticSpec& spec);

/// Interchange document for a synthetic ensemble: tokens "w0", "w1", ...;
/// models "model_000", ... with seed = row index.
TextDocument to_document(const AttentionMatrix& matrix);

/// Rescales `values` affinely so their mean is 0 and unbiased sample
/// variance is `variance`.
std::vector<double> standardized(std::vector<double> values, double variance = 1.0);

}  // namespace xsnr
