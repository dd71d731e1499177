#pragma once

// Rare/weak model families: tail exponents, calibration and P-value samplers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hcsparse/errors.hpp"
#include "hcsparse/rng.hpp"

namespace hcsparse {

enum class Family { NormalMeans, TwoSampleNormal, SmallPoisson, Heteroscedastic };

inline std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::NormalMeans: return "normal-means";
    case Family::TwoSampleNormal: return "two-sample-normal";
    case Family::SmallPoisson: return "small-poisson";
    case Family::Heteroscedastic: return "heteroscedastic";
  }
  return "unknown";
}

inline std::optional<Family> parse_family(std::string_view name) noexcept {
  for (Family f : {Family::NormalMeans, Family::TwoSampleNormal, Family::SmallPoisson,
                   Family::Heteroscedastic}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

struct ModelSpec {
  Family family = Family::NormalMeans;
  /// Variance of the non-null effect; read only by Heteroscedastic.
  double sigma2 = 1.0;

  static ModelSpec normal_means() { return {Family::NormalMeans, 1.0}; }
  static ModelSpec heteroscedastic(double sigma2) { return {Family::Heteroscedastic, sigma2}; }

  void validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      throw DomainError("sigma2 must be a positive finite number");
    }
  }

  /// Whether the family has a P-value sampler (the others are exponent-only).
  bool sampled() const noexcept {
    return family == Family::NormalMeans || family == Family::Heteroscedastic;
  }

  std::string describe() const {
    std::string s(family_name(family));
    if (family == Family::Heteroscedastic) s += "(sigma2=" + std::to_string(sigma2) + ")";
    return s;
  }
};

/// Calibration bundle: n tests, rarity beta, strength r, HC truncation gamma0.
struct RareWeakParams {
  std::size_t n = 0;
  double beta = 0.0;
  double r = 0.0;
  double gamma0 = 0.1;

  void validate() const {
    if (n < 1) throw DomainError("n must be at least 1");
    if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("r must be a non-negative finite number");
    if (!(gamma0 > 0.0 && gamma0 < 1.0)) throw DomainError("gamma0 must lie in (0, 1)");
  }

  /// epsilon_n = n^-beta
  double epsilon() const { return std::pow(static_cast<double>(n), -beta); }
  /// mu_n = sqrt(2 r log n)
  double mu() const { return std::sqrt(2.0 * r * std::log(static_cast<double>(n))); }
};

/// A sample of P-values with the (possibly empty) set of planted indices,
/// stored 0-based and ascending.
struct PValueSample {
  std::vector<double> pvalues;
  std::vector<std::size_t> planted;

  std::size_t size() const noexcept { return pvalues.size(); }

  void validate() const {
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
      if (!(pvalues[i] > 0.0 && pvalues[i] < 1.0)) {
        throw DomainError("P-value at index " + std::to_string(i) + " is outside (0, 1)");
      }
    }
    for (std::size_t j = 0; j < planted.size(); ++j) {
      if (planted[j] >= pvalues.size()) throw DomainError("planted index out of range");
      if (j > 0 && planted[j] <= planted[j - 1]) {
        throw DomainError("planted indices must be distinct and ascending");
      }
    }
  }
};

namespace detail {

constexpr double kLn2 = 0.69314718055994530942;

inline double sq(double x) { return x * x; }

/// Tail exponent without argument checks; r = 0 evaluates the r -> 0+ limit.
inline double alpha_unchecked(const ModelSpec& model, double q, double r) {
  switch (model.family) {
    case Family::NormalMeans:
      return std::sqrt(q) > std::sqrt(r) ? sq(std::sqrt(q) - std::sqrt(r)) : 0.0;
    case Family::TwoSampleNormal: {
      const double s = std::sqrt(r / 2.0);
      return std::sqrt(q) > s ? sq(std::sqrt(q) - s) : 0.0;
    }
    case Family::SmallPoisson: {
      // Minimum of the formula is 0 at q = r ln2 / 2; below it the exponent is floored.
      if (r <= 0.0) return std::numeric_limits<double>::infinity();
      if (q <= r * kLn2 / 2.0) return 0.0;
      const double v = q * (std::log(2.0 * q / (r * kLn2)) - 1.0) / kLn2 + r / 2.0;
      return std::max(v, 0.0);
    }
    case Family::Heteroscedastic:
      return std::sqrt(q) > std::sqrt(r) ? sq(std::sqrt(q) - std::sqrt(r)) / model.sigma2 : 0.0;
  }
  return 0.0;
}

}  // namespace detail

/// Tail exponent alpha(q, r): Pr(X < n^-q) ~ n^-alpha(q,r) for a non-null P-value X.
inline double alpha(const ModelSpec& model, double q, double r) {
  model.validate();
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("q must lie in (0, 1]");
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("r must be positive");
  return detail::alpha_unchecked(model, q, r);
}

/// Smallest/largest P-value a sampler emits.
inline constexpr double kPValueFloor = std::numeric_limits<double>::epsilon();
inline constexpr double kPValueCeil = 1.0 - std::numeric_limits<double>::epsilon();

inline double clip_pvalue(double p) noexcept { return std::clamp(p, kPValueFloor, kPValueCeil); }

/// Standard normal survival function.
inline double normal_sf(double z) noexcept { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// One-sided P-value Pr(N(0,1) >= z), clipped into (0,1).
inline double one_sided_pvalue(double z) noexcept { return clip_pvalue(normal_sf(z)); }

/// A single draw from the non-null P-value law G of a sampled family.
inline double draw_nonnull_pvalue(const ModelSpec& model, double mu, RandomStream& rng) {
  switch (model.family) {
    case Family::NormalMeans:
      return one_sided_pvalue(mu + rng.normal());
    case Family::Heteroscedastic:
      return one_sided_pvalue(mu + std::sqrt(model.sigma2) * rng.normal());
    default:
      throw DomainError("no P-value sampler for family " + std::string(family_name(model.family)));
  }
}

inline PValueSample sample_h0(std::size_t n, RandomStream& rng) {
  if (n < 1) throw DomainError("n must be at least 1");
  PValueSample s;
  s.pvalues.resize(n);
  for (auto& p : s.pvalues) p = rng.uniform();
  return s;
}

/// Mixture (1 - eps_n) Unif(0,1) + eps_n G. Each index is planted independently;
/// per index the stream yields one planting uniform, then the P-value variate.
inline PValueSample sample_h1(const RareWeakParams& params, const ModelSpec& model,
                              RandomStream& rng) {
  params.validate();
  model.validate();
  if (!model.sampled()) {
    throw DomainError("no P-value sampler for family " + std::string(family_name(model.family)));
  }
  const double eps = params.epsilon();
  const double mu = params.mu();
  PValueSample s;
  s.pvalues.resize(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    if (rng.bernoulli(eps)) {
      s.planted.push_back(i);
      s.pvalues[i] = draw_nonnull_pvalue(model, mu, rng);
    } else {
      s.pvalues[i] = rng.uniform();
    }
  }
  return s;
}

}  // namespace hcsparse
