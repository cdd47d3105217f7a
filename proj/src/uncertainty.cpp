#include "xsnr/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>
#include <vector>

#include "xsnr/rng.hpp"
#include "xsnr/stats.hpp"

namespace xsnr {

std::string_view to_string(CiMethod method) {
  switch (method) {
    case CiMethod::kPercentileBootstrap:
      return "percentile_bootstrap";
    case CiMethod::kChiSquareVariance:
      return "chi_square_variance";
  }
  return "percentile_bootstrap";
}

std::string_view to_string(Statistic statistic) {
  switch (statistic) {
    case Statistic::kSignal:
      return "signal";
    case Statistic::kNoise:
      return "noise";
    case Statistic::kSnr:
      return "snr";
    case Statistic::kBiasCorrectedSignal:
      return "bias_corrected_signal";
  }
  return "signal";
}

Statistic parse_statistic(std::string_view name) {
  for (auto s : {Statistic::kSignal, Statistic::kNoise, Statistic::kSnr,
                 Statistic::kBiasCorrectedSignal}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown statistic '" + std::string(name) + "'");
}

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1)");
  }
}

std::vector<SignalNoise> resample(const AttentionMatrix& matrix,
                                  const BootstrapConfig& config) {
  const std::size_t m = matrix.n_models();
  if (m < 2) throw ValidationError("bootstrap needs at least two models");
  if (matrix.n_words() < 2) throw ValidationError("bootstrap needs at least two words");
  if (config.replicates < kMinBootstrapReplicates) {
    throw ValidationError("bootstrap needs at least " +
                          std::to_string(kMinBootstrapReplicates) + " replicates");
  }
  check_level(config.level);

  std::vector<SignalNoise> out(config.replicates);
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(m);
    for (std::size_t r = begin; r < end; ++r) {
      SplitMix64 rng(stream_seed(config.seed, r));
      for (auto& row : rows) row = static_cast<std::size_t>(rng.below(m));
      out[r] = signal_and_noise(matrix, rows);
    }
  };

  unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency()
                                         : config.threads;
  threads = std::clamp<unsigned>(threads, 1u,
                                 static_cast<unsigned>(config.replicates));
  if (threads == 1) {
    run(0, config.replicates);
    return out;
  }
  std::vector<std::thread> workers;
  const std::size_t chunk = (config.replicates + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(config.replicates, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back(run, begin, end);
  }
  for (auto& w : workers) w.join();
  return out;
}

std::optional<double> evaluate(Statistic statistic, const SignalNoise& sn, std::size_t m) {
  switch (statistic) {
    case Statistic::kSignal:
      return sn.signal;
    case Statistic::kNoise:
      return sn.noise;
    case Statistic::kBiasCorrectedSignal:
      return sn.signal - sn.noise / static_cast<double>(m);
    case Statistic::kSnr:
      if (sn.noise > 0.0) return sn.signal / sn.noise;
      return std::nullopt;
  }
  return std::nullopt;
}

ConfidenceInterval percentile_interval(std::span<const SignalNoise> replicates,
                                       Statistic statistic, std::size_t m,
                                       const BootstrapConfig& config) {
  std::vector<double> values;
  values.reserve(replicates.size());
  for (const auto& sn : replicates) {
    if (auto v = evaluate(statistic, sn, m)) values.push_back(*v);
  }
  if (values.empty()) {
    throw DegenerateInputError("bootstrap: every replicate of " +
                               std::string(to_string(statistic)) + " is degenerate");
  }
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - config.level;

  ConfidenceInterval ci;
  ci.lower = stats::quantile_sorted(values, alpha / 2.0);
  ci.upper = stats::quantile_sorted(values, 1.0 - alpha / 2.0);
  ci.level = config.level;
  ci.method = CiMethod::kPercentileBootstrap;
  ci.replicates = config.replicates;
  ci.seed = config.seed;
  ci.excluded = replicates.size() - values.size();
  ci.unreliable = static_cast<double>(ci.excluded) >
                  kUnreliableExclusionRate * static_cast<double>(replicates.size());
  return ci;
}

}  // namespace

ConfidenceInterval bootstrap_ci(const AttentionMatrix& matrix, Statistic statistic,
                                const BootstrapConfig& config) {
  const auto replicates = resample(matrix, config);
  return percentile_interval(replicates, statistic, matrix.n_models(), config);
}

ConfidenceInterval variance_ci_chisquare(const AttentionMap& map, double level) {
  check_level(level);
  const double s2 = signal_deterministic(map);
  const double dof = static_cast<double>(map.size() - 1);
  const double alpha = 1.0 - level;
  ConfidenceInterval ci;
  ci.level = level;
  ci.method = CiMethod::kChiSquareVariance;
  if (s2 == 0.0) return ci;
  ci.lower = dof * s2 / stats::chi_square_quantile(1.0 - alpha / 2.0, dof);
  ci.upper = dof * s2 / stats::chi_square_quantile(alpha / 2.0, dof);
  return ci;
}

void attach_bootstrap_cis(SensitivityReport& report, const AttentionMatrix& matrix,
                          const BootstrapConfig& config) {
  const auto replicates = resample(matrix, config);
  const std::size_t m = matrix.n_models();
  report.signal_ci = percentile_interval(replicates, Statistic::kSignal, m, config);
  report.noise_ci = percentile_interval(replicates, Statistic::kNoise, m, config);
  try {
    report.snr_ci = percentile_interval(replicates, Statistic::kSnr, m, config);
  } catch (const DegenerateInputError&) {
    // zero-noise ensemble: every resampled SNR is infinite, no interval
    report.snr_ci.reset();
  }
  if (report.bias_corrected_signal) {
    report.bias_corrected_signal_ci =
        percentile_interval(replicates, Statistic::kBiasCorrectedSignal, m, config);
  }
}

}  // namespace xsnr
