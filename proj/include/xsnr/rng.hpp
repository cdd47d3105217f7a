#pragma once

// Platform-independent random streams.
//
// Every random quantity in the toolkit comes from SplitMix64: a 64-bit
// counter advanced by the golden-ratio increment 0x9E3779B97F4A7C15 and
// passed through the Stafford "mix13" finalizer. Derived quantities are
// computed here rather than with <random> distributions, whose algorithms
// differ between standard libraries:
//   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
//   below(b)   = Lemire multiply-shift with rejection, exact on [0, b)
//   normal()   = Box-Muller, u1 = 1 - uniform(), u2 = uniform(); the sine
//                variate is cached and returned by the following call
// Independent streams (bootstrap replicates, sweep permutations) are keyed
// by stream_seed(master, index) = mix(master ^ mix(index + increment)).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace xsnr {

/// Stafford mix13 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the `index`-th child stream of `master`.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

class SplitMix64 {
 public:
  static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform();
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  std::uint64_t state_;
  std::optional<double> spare_normal_;
};

/// Fisher-Yates, walking from the last position down.
void shuffle(std::span<std::size_t> values, SplitMix64& rng);

/// Identity permutation of size n, shuffled.
std::vector<std::size_t> random_permutation(std::size_t n, SplitMix64& rng);

/// Uniform k-subset of [0, n), returned in ascending order (partial
/// Fisher-Yates over the first k positions).
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, SplitMix64& rng);

}  // namespace xsnr
