#pragma once

// Paired null/alternative P-value samples that share every coordinate off the
// planted set, and the diagnostics that compare their HC statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hcsparse/errors.hpp"
#include "hcsparse/hc.hpp"
#include "hcsparse/models.hpp"
#include "hcsparse/parallel.hpp"
#include "hcsparse/rng.hpp"
#include "hcsparse/stats.hpp"

namespace hcsparse {

struct CoupledDraw {
  std::vector<double> q0;  // null P-values
  std::vector<double> q1;  // alternative P-values
  std::vector<std::size_t> planted;
  std::size_t m = 0;
  /// Smallest value either sample takes on the planted set; absent when I is empty.
  std::optional<double> qbar_minus;
  /// Smallest value of either sample.
  double q_minus = 0.0;
  /// Largest null value strictly below qbar_minus; absent when there is none.
  std::optional<double> q_plus;

  std::size_t n() const noexcept { return q0.size(); }
};

/// Per index the stream yields a planting uniform, then either one shared
/// uniform (off I) or a fresh uniform for q0 followed by a G draw for q1.
inline CoupledDraw coupled_sample(const RareWeakParams& params, const ModelSpec& model,
                                  RandomStream& rng) {
  params.validate();
  model.validate();
  if (!model.sampled()) {
    throw DomainError("coupling needs a sampled family, got " +
                      std::string(family_name(model.family)));
  }
  const double eps = params.epsilon();
  const double mu = params.mu();
  const std::size_t n = params.n;

  CoupledDraw d;
  d.q0.resize(n);
  d.q1.resize(n);
  double qbar = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(eps)) {
      d.planted.push_back(i);
      d.q0[i] = rng.uniform();
      d.q1[i] = draw_nonnull_pvalue(model, mu, rng);
      qbar = std::min({qbar, d.q0[i], d.q1[i]});
    } else {
      d.q0[i] = d.q1[i] = rng.uniform();
    }
  }
  d.m = d.planted.size();
  if (d.m > 0) d.qbar_minus = qbar;
  d.q_minus = std::min(*std::min_element(d.q0.begin(), d.q0.end()),
                       *std::min_element(d.q1.begin(), d.q1.end()));
  double qp = -1.0;
  for (double v : d.q0) {
    if (v < qbar && v > qp) qp = v;
  }
  if (qp > 0.0) d.q_plus = qp;
  return d;
}

struct DeltaDiagnostics {
  double hc0 = 0.0;
  double hc1 = 0.0;
  /// Right end of the supremum interval: min(i_max / n, 0.499).
  double t1 = 0.0;
  /// sup over [Q+, t1] of sqrt(n) Delta_n w; absent when not applicable.
  std::optional<double> sup_bound;
  /// Same supremum over [Qbar-, t1].
  std::optional<double> sup_bound_qbar;
  bool ordering_ok = false;
  /// hc1 - hc0 <= sup_bound + slack; absent when Q+ is undefined or the ordering fails.
  std::optional<bool> bound_ok;

  bool applicable() const noexcept { return bound_ok.has_value(); }
};

/// Pathwise check of HC(1) - HC(0) <= sup_{t in [Q+, t1]} sqrt(n) Delta_n(t) w(t).
/// When Q+ exceeds t1 the interval degenerates to {t1}, where Delta_n is 0.
inline DeltaDiagnostics difference_bound_check(const CoupledDraw& draw, double gamma0, double slack = 1e-9) {
  DeltaDiagnostics out;
  const std::size_t n = draw.n();
  out.hc0 = hc_star(std::span<const double>(draw.q0), gamma0).hc_star;
  out.hc1 = hc_star(std::span<const double>(draw.q1), gamma0).hc_star;
  out.t1 = std::min(static_cast<double>(hc_index_limit(n, gamma0)) / static_cast<double>(n), 0.499);

  if (draw.m == 0) {
    out.ordering_ok = true;
    out.sup_bound = 0.0;
    out.sup_bound_qbar = 0.0;
    out.bound_ok = out.hc1 - out.hc0 <= slack;
    return out;
  }
  out.ordering_ok = draw.q_minus < *draw.qbar_minus;
  if (!out.ordering_ok || !draw.q_plus) return out;

  const std::span<const double> s0(draw.q0);
  const std::span<const double> s1(draw.q1);
  out.sup_bound = weighted_sup_delta(s0, s1, std::min(*draw.q_plus, out.t1), out.t1);
  out.sup_bound_qbar = weighted_sup_delta(s0, s1, std::min(*draw.qbar_minus, out.t1), out.t1);
  out.bound_ok = out.hc1 - out.hc0 <= *out.sup_bound + slack;
  return out;
}

/// One row of the per-draw diagnostics stream.
struct DrawRecord {
  std::uint64_t seed = 0;  // substream key of the draw
  std::size_t m = 0;
  DeltaDiagnostics diag;
};

inline std::vector<DrawRecord> coupled_diagnostics(const RareWeakParams& params,
                                                   const ModelSpec& model, std::size_t draws,
                                                   std::uint64_t master_seed, double slack = 1e-9,
                                                   unsigned workers = 0) {
  params.validate();
  return parallel_map(draws, workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(master_seed, {tag(StreamTag::CoupledDraw), k});
    const CoupledDraw d = coupled_sample(params, model, rng);
    return DrawRecord{rng.key(), d.m, difference_bound_check(d, params.gamma0, slack)};
  });
}

struct GapEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

/// Monte Carlo estimate of Pr(HC(1) > HC(0) + c) over coupled draws.
inline GapEstimate hc_gap_probability(const RareWeakParams& params, const ModelSpec& model,
                                      double c, std::size_t reps, std::uint64_t master_seed,
                                      unsigned workers = 0) {
  params.validate();
  if (!(c > 0.0)) throw DomainError("c must be positive");
  if (reps < 1) throw DomainError("reps must be at least 1");
  const auto hits = parallel_map(reps, workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(master_seed, {tag(StreamTag::CoupledDraw), k});
    const CoupledDraw d = coupled_sample(params, model, rng);
    const double h0 = hc_star(std::span<const double>(d.q0), params.gamma0).hc_star;
    const double h1 = hc_star(std::span<const double>(d.q1), params.gamma0).hc_star;
    return h1 > h0 + c ? 1 : 0;
  });
  GapEstimate g;
  g.reps = reps;
  std::size_t count = 0;
  for (int h : hits) count += static_cast<std::size_t>(h);
  g.estimate = static_cast<double>(count) / static_cast<double>(reps);
  g.se = binomial_se(g.estimate, reps);
  return g;
}

/// n (n+1) min_i S_i for uniform spacings S_0..S_n (endpoints 0 and 1
/// included), one value per replicate.
inline std::vector<double> spacing_min_statistics(std::size_t n, std::size_t reps,
                                                  std::uint64_t master_seed, unsigned workers = 0) {
  if (n < 1) throw DomainError("n must be at least 1");
  return parallel_map(reps, workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(master_seed, {tag(StreamTag::Spacing), n, k});
    std::vector<double> u(n);
    for (auto& v : u) v = rng.uniform();
    std::sort(u.begin(), u.end());
    double s = std::min(u.front(), 1.0 - u.back());
    for (std::size_t i = 1; i < n; ++i) s = std::min(s, u[i] - u[i - 1]);
    const double nn = static_cast<double>(n);
    return nn * (nn + 1.0) * s;
  });
}

/// KS distance between the law of n (n+1) min S_i and Exp(1). Returns no
/// value for n < 2, where the limit law is not meaningful.
inline std::optional<double> spacing_law_check(std::size_t n, std::size_t reps,
                                               std::uint64_t master_seed, unsigned workers = 0) {
  if (n < 2 || reps < 1) return std::nullopt;
  const auto stats = spacing_min_statistics(n, reps, master_seed, workers);
  return ks_distance(std::span<const double>(stats), [](double x) { return -std::expm1(-x); });
}

}  // namespace hcsparse
