#pragma once

// Higher Criticism statistic and the weighted CDF-difference supremum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hcsparse/errors.hpp"
#include "hcsparse/models.hpp"

namespace hcsparse {

/// w(t) = 1 / sqrt(t (1 - t)), the binomial standardization of a CDF deviation.
struct WeightFunction {
  double operator()(double t) const noexcept { return 1.0 / std::sqrt(t * (1.0 - t)); }
};

inline constexpr WeightFunction weight{};

/// Number of order statistics the maximum runs over: max(1, floor(n gamma0)).
inline std::size_t hc_index_limit(std::size_t n, double gamma0) {
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * gamma0));
  return std::max<std::size_t>(1, std::min(k, n));
}

struct HCEvaluation {
  double hc_star = -std::numeric_limits<double>::infinity();
  std::size_t argmax_index = 0;  // 1-based rank of the maximizing order statistic
  std::optional<std::vector<double>> components;
  std::size_t n = 0;
  double gamma0 = 0.0;
};

namespace detail {

inline void check_open_unit(std::span<const double> p) {
  if (p.empty()) throw DomainError("P-value sample is empty");
  for (double v : p) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("P-value outside (0, 1) passed to HC");
  }
}

inline double hc_component(std::size_t i, std::size_t n, double p_i) noexcept {
  const double nn = static_cast<double>(n);
  return std::sqrt(nn) * (static_cast<double>(i) / nn - p_i) / std::sqrt(p_i * (1.0 - p_i));
}

}  // namespace detail

/// HC_{n,i} for i = 1..n, evaluated on the ascending order statistics.
inline std::vector<double> hc_components(std::span<const double> pvalues) {
  detail::check_open_unit(pvalues);
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::hc_component(i + 1, n, sorted[i]);
  return out;
}

inline std::vector<double> hc_components(const PValueSample& sample) {
  return hc_components(std::span<const double>(sample.pvalues));
}

/// HC* = max_{1 <= i <= i_max} HC_{n,i}. Ties keep the smallest index.
/// Without components only the i_max smallest values are ordered.
inline HCEvaluation hc_star(std::span<const double> pvalues, double gamma0,
                            bool keep_components = false) {
  if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw DomainError("gamma0 must lie in (0, 1)");
  detail::check_open_unit(pvalues);
  const std::size_t n = pvalues.size();
  const std::size_t i_max = hc_index_limit(n, gamma0);

  HCEvaluation eval;
  eval.n = n;
  eval.gamma0 = gamma0;

  if (keep_components) {
    eval.components = hc_components(pvalues);
    const auto& c = *eval.components;
    const auto it = std::max_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(i_max));
    eval.hc_star = *it;
    eval.argmax_index = static_cast<std::size_t>(it - c.begin()) + 1;
    return eval;
  }

  std::vector<double> head(pvalues.begin(), pvalues.end());
  if (i_max < n) {
    std::nth_element(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(i_max - 1), head.end());
    head.resize(i_max);
  }
  std::sort(head.begin(), head.end());
  for (std::size_t i = 0; i < i_max; ++i) {
    const double v = detail::hc_component(i + 1, n, head[i]);
    if (v > eval.hc_star) {
      eval.hc_star = v;
      eval.argmax_index = i + 1;
    }
  }
  return eval;
}

inline HCEvaluation hc_star(const PValueSample& sample, double gamma0, bool keep_components = false) {
  return hc_star(std::span<const double>(sample.pvalues), gamma0, keep_components);
}

/// sup over t in [t_lo, t_hi] of sqrt(n) (F1(t) - F0(t)) w(t), with F0, F1 the
/// empirical CDFs of the two samples.
///
/// The CDF difference is a right-continuous step function, so the supremum is
/// taken piece by piece: on a piece [a, b) with constant difference D > 0 it is
/// D max(w(a), w(b)) (the right end as a limit from below); with D < 0 it is
/// D min_{[a,b]} w. Only the jump points inside the interval are visited.
inline double weighted_sup_delta(std::span<const double> sample0, std::span<const double> sample1,
                                 double t_lo, double t_hi) {
  if (sample0.size() != sample1.size()) throw DomainError("samples must have equal length");
  if (sample0.empty()) throw DomainError("samples are empty");
  if (!(t_lo > 0.0 && t_lo <= t_hi && t_hi < 1.0)) {
    throw DomainError("interval must satisfy 0 < t_lo <= t_hi < 1");
  }
  std::vector<double> s0(sample0.begin(), sample0.end());
  std::vector<double> s1(sample1.begin(), sample1.end());
  std::sort(s0.begin(), s0.end());
  std::sort(s1.begin(), s1.end());

  const double scale = 1.0 / std::sqrt(static_cast<double>(s0.size()));

  // Signed count difference #{s1 <= t} - #{s0 <= t}.
  auto i0 = static_cast<std::size_t>(std::upper_bound(s0.begin(), s0.end(), t_lo) - s0.begin());
  auto i1 = static_cast<std::size_t>(std::upper_bound(s1.begin(), s1.end(), t_lo) - s1.begin());

  auto piece_sup = [&](long long diff, double a, double b) {
    if (diff == 0) return 0.0;
    const double d = static_cast<double>(diff) * scale;
    if (diff > 0) return d * std::max(weight(a), weight(b));
    return d * weight(std::clamp(0.5, a, b));
  };

  double best = -std::numeric_limits<double>::infinity();
  double left = t_lo;
  while (true) {
    const double next0 = i0 < s0.size() ? s0[i0] : 2.0;
    const double next1 = i1 < s1.size() ? s1[i1] : 2.0;
    const double next = std::min(next0, next1);
    const auto diff = static_cast<long long>(i1) - static_cast<long long>(i0);
    if (next > t_hi) {
      best = std::max(best, piece_sup(diff, left, t_hi));
      break;
    }
    best = std::max(best, piece_sup(diff, left, next));
    while (i0 < s0.size() && s0[i0] == next) ++i0;
    while (i1 < s1.size() && s1[i1] == next) ++i1;
    left = next;
  }
  return best;
}

inline double weighted_sup_delta(const PValueSample& sample0, const PValueSample& sample1,
                                 double t_lo, double t_hi) {
  return weighted_sup_delta(std::span<const double>(sample0.pvalues),
                            std::span<const double>(sample1.pvalues), t_lo, t_hi);
}

}  // namespace hcsparse
