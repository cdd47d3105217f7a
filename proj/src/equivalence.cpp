#include "xsnr/equivalence.hpp"

#include <algorithm>
#include <cmath>

namespace xsnr {

namespace {

void check_proportion(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string("invalid proportion ") + name +
                          " (must lie in [0, 1])");
  }
}

}  // namespace

double z_statistic(double a, double b, std::int64_t n) {
  check_proportion(a, "a");
  check_proportion(b, "b");
  if (n < 1) throw ValidationError("test-set size n must be >= 1");
  if (a == b) return 0.0;
  const double pooled = (a + b) / 2.0;
  const double se = std::sqrt(pooled * (1.0 - pooled) / static_cast<double>(n));
  return std::abs(a - b) / se;
}

EquivalenceResult test_equivalence(double a, double b, std::int64_t n,
                                   double threshold) {
  EquivalenceResult r;
  r.z = z_statistic(a, b, n);
  r.threshold = threshold;
  r.equivalent = r.z < threshold;
  r.a = a;
  r.b = b;
  r.n = n;
  return r;
}

EquivalentSubset select_equivalent_subset(std::span<const ModelRecord> models,
                                          double threshold,
                                          std::optional<std::size_t> max_size) {
  if (models.empty()) throw ValidationError("equivalence: empty model list");
  if (max_size && *max_size == 0) throw ValidationError("equivalence: max size must be >= 1");
  const std::int64_t n = models.front().n_test;
  for (const auto& m : models) {
    m.validate();
    if (m.n_test != n) {
      throw ValidationError("equivalence: heterogeneous n_test ('" + m.model_id +
                            "' has " + std::to_string(m.n_test) + ", expected " +
                            std::to_string(n) + ")");
    }
  }

  std::vector<ModelRecord> sorted(models.begin(), models.end());
  std::sort(sorted.begin(), sorted.end(), [](const ModelRecord& x, const ModelRecord& y) {
    if (x.accuracy != y.accuracy) return x.accuracy > y.accuracy;
    return x.model_id < y.model_id;
  });

  const double best = sorted.front().accuracy;
  std::size_t limit = sorted.size();
  if (max_size) limit = std::min(limit, *max_size);
  std::size_t length = 1;
  double z = 0.0;
  for (std::size_t k = 2; k <= limit; ++k) {
    const double zk = z_statistic(best, sorted[k - 1].accuracy, n);
    if (zk < threshold) {
      length = k;
      z = zk;
    }
  }

  EquivalentSubset subset;
  subset.threshold = threshold;
  subset.a_best = best;
  subset.b_worst = sorted[length - 1].accuracy;
  subset.z = z;
  for (std::size_t i = 0; i < length; ++i) subset.model_ids.push_back(sorted[i].model_id);
  return subset;
}

}  // namespace xsnr
