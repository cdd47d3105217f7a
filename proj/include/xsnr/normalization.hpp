#pragma once

#include <cstddef>
#include <optional>

#include "xsnr/core.hpp"

namespace xsnr {

enum class ScaleRule { kSumToOne };
enum class RankKey { kAbsoluteValue };

/// Keep the k largest |weights|, zero the rest, rescale the survivors so
/// their absolute values sum to one (signs preserved).
struct NormalizationSpec {
  /// Explicit support size; nullopt means "auto": the non-zero count of a
  /// reference map.
  std::optional<std::size_t> support;
  ScaleRule scale = ScaleRule::kSumToOne;
  RankKey rank_key = RankKey::kAbsoluteValue;
};

std::size_t nonzero_count(const AttentionMap& map);

/// Resolves the support size of `spec` (using `reference` in auto mode).
std::size_t resolve_support(const NormalizationSpec& spec, const AttentionMap* reference);

AttentionMap normalize_map(const AttentionMap& map, const NormalizationSpec& spec,
                           const AttentionMap* reference = nullptr);

/// Normalizes every row with the same support size.
AttentionMatrix normalize_matrix(const AttentionMatrix& matrix,
                                 const NormalizationSpec& spec,
                                 const AttentionMap* reference = nullptr);

}  // namespace xsnr
