#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace hcsparse {

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `samples` and a continuous CDF.
template <class Cdf>
double ks_distance(std::span<const double> samples, Cdf&& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double binomial_se(double p_hat, std::size_t reps) {
  return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(reps));
}

/// Upper quantile by nearest rank: the ceil(p R)-th smallest value (1-based,
/// at least the first). p = 0 gives -inf.
inline double nearest_rank_quantile(std::vector<double> values, double p) {
  if (values.empty() || p <= 0.0) return -std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  const double r = std::ceil(p * static_cast<double>(values.size()) - 1e-9);
  const auto k = static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(values.size())));
  return values[k - 1];
}

}  // namespace hcsparse
