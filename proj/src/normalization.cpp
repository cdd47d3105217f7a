#include "xsnr/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace xsnr {

std::size_t nonzero_count(const AttentionMap& map) {
  return static_cast<std::size_t>(
      std::count_if(map.weights.begin(), map.weights.end(), [](double w) { return w != 0.0; }));
}

std::size_t resolve_support(const NormalizationSpec& spec, const AttentionMap* reference) {
  if (spec.support) {
    if (*spec.support < 1) throw ValidationError("normalization: support size must be >= 1");
    return *spec.support;
  }
  if (reference == nullptr) {
    throw ValidationError("normalization: automatic support size needs a reference map");
  }
  const std::size_t k = nonzero_count(*reference);
  if (k == 0) throw DegenerateInputError("normalization: reference map is all zero");
  return k;
}

namespace {

std::vector<double> normalize_weights(std::span<const double> weights, std::size_t k) {
  const std::size_t n = weights.size();
  if (k > n) {
    throw ValidationError("normalization: support size " + std::to_string(k) +
                          " exceeds text length " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(weights[a]) > std::abs(weights[b]);
  });
  if (weights[order.front()] == 0.0) {
    throw DegenerateInputError("normalization: all weights are zero");
  }
  if (weights[order[k - 1]] == 0.0) {
    throw DegenerateInputError("normalization: fewer than " + std::to_string(k) +
                               " non-zero weights");
  }
  // L1 mass accumulated in word order for platform-stable rounding.
  std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(kept.begin(), kept.end());
  double mass = 0.0;
  for (std::size_t j : kept) mass += std::abs(weights[j]);
  // Already unit mass up to summation rounding: keep weights bit-exact so
  // normalization is idempotent.
  if (std::abs(mass - 1.0) <=
      static_cast<double>(k) * std::numeric_limits<double>::epsilon()) {
    mass = 1.0;
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t j : kept) out[j] = weights[j] / mass;
  return out;
}

}  // namespace

AttentionMap normalize_map(const AttentionMap& map, const NormalizationSpec& spec,
                           const AttentionMap* reference) {
  const std::size_t k = resolve_support(spec, reference);
  return AttentionMap{map.text_id, map.model_id, normalize_weights(map.weights, k)};
}

AttentionMatrix normalize_matrix(const AttentionMatrix& matrix, const NormalizationSpec& spec,
                                 const AttentionMap* reference) {
  const std::size_t k = resolve_support(spec, reference);
  std::vector<double> values;
  values.reserve(matrix.data().size());
  for (std::size_t i = 0; i < matrix.n_models(); ++i) {
    try {
      const auto row = normalize_weights(matrix.row(i), k);
      values.insert(values.end(), row.begin(), row.end());
    } catch (const DegenerateInputError& e) {
      throw DegenerateInputError("row " + std::to_string(i) + " ('" + matrix.model_ids()[i] +
                                 "'): " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(i) + " ('" + matrix.model_ids()[i] +
                            "'): " + e.what());
    }
  }
  return AttentionMatrix(matrix.text_id(), matrix.model_ids(), matrix.n_words(),
                         std::move(values));
}

}  // namespace xsnr
