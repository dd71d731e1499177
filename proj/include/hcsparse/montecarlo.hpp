#pragma once

// Power experiments: level calibration of HC*, error-sum estimates, (beta, r)
// sweeps, and the row-structured and dense-plus-rare model comparisons.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "hcsparse/boundary.hpp"
#include "hcsparse/errors.hpp"
#include "hcsparse/hc.hpp"
#include "hcsparse/models.hpp"
#include "hcsparse/parallel.hpp"
#include "hcsparse/rng.hpp"
#include "hcsparse/stats.hpp"

namespace hcsparse {

struct MonteCarloConfig {
  double level = 0.05;
  std::size_t reps = 400;
  std::size_t calibration_reps = 4000;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  void validate() const {
    if (!(level > 0.0 && level <= 1.0)) throw DomainError("level must lie in (0, 1]");
    if (reps < 1) throw DomainError("reps must be at least 1");
    if (calibration_reps < 100) throw DomainError("calibration reps must be at least 100");
  }
};

struct PowerEstimate {
  double beta = 0.0;
  double r = 0.0;
  std::size_t n = 0;  // size of the P-value sample the statistic ran on
  std::size_t reps = 0;
  double threshold = 0.0;
  double level = 0.0;
  double type1 = 0.0;
  double type2 = 0.0;
  double error_sum = 0.0;
  double se = 0.0;
  /// Smallest type1 + type2 over every threshold splitting the pooled statistics.
  double best_error_sum = 0.0;
  /// Key of the calibration substream family.
  std::uint64_t calibration_seed = 0;
};

/// HC* of `reps` uniform samples of size n; replicate k reads substream
/// (seed; tag, n, k).
inline std::vector<double> null_hc_statistics(std::size_t n, double gamma0, std::size_t reps,
                                              std::uint64_t seed, StreamTag stream,
                                              unsigned workers = 0) {
  return parallel_map(reps, workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(seed, {tag(stream), n, k});
    const PValueSample s = sample_h0(n, rng);
    return hc_star(s, gamma0).hc_star;
  });
}

/// Level-`level` threshold h(n): the nearest-rank (1 - level) quantile of HC*
/// over `reps` null simulations. level = 1 rejects always (-inf).
inline double calibrate_threshold(std::size_t n, double gamma0, double level, std::size_t reps,
                                  std::uint64_t seed, unsigned workers = 0) {
  if (!(level > 0.0 && level <= 1.0)) throw DomainError("level must lie in (0, 1]");
  if (reps < 100) throw DomainError("calibration reps must be at least 100");
  if (level == 1.0) return -std::numeric_limits<double>::infinity();
  return nearest_rank_quantile(null_hc_statistics(n, gamma0, reps, seed, StreamTag::NullCalibration, workers),
                               1.0 - level);
}

/// min over thresholds h of Pr_null(T > h) + Pr_alt(T <= h), empirically.
inline double best_error_sum(std::vector<double> null_stats, std::vector<double> alt_stats) {
  std::sort(null_stats.begin(), null_stats.end());
  std::sort(alt_stats.begin(), alt_stats.end());
  const double r0 = static_cast<double>(null_stats.size());
  const double r1 = static_cast<double>(alt_stats.size());
  double best = 1.0;  // h = -inf
  auto consider = [&](double h) {
    const auto above = null_stats.end() - std::upper_bound(null_stats.begin(), null_stats.end(), h);
    const auto below = std::upper_bound(alt_stats.begin(), alt_stats.end(), h) - alt_stats.begin();
    best = std::min(best, static_cast<double>(above) / r0 + static_cast<double>(below) / r1);
  };
  for (double h : null_stats) consider(h);
  for (double h : alt_stats) consider(h);
  return best;
}

/// Error rates of the test "reject when T > threshold".
inline PowerEstimate summarize_power(const std::vector<double>& null_stats,
                                     const std::vector<double>& alt_stats, double threshold,
                                     double level) {
  PowerEstimate e;
  e.threshold = threshold;
  e.level = level;
  e.reps = alt_stats.size();
  const auto rejects = std::count_if(null_stats.begin(), null_stats.end(),
                                     [&](double t) { return t > threshold; });
  const auto accepts = std::count_if(alt_stats.begin(), alt_stats.end(),
                                     [&](double t) { return t <= threshold; });
  e.type1 = static_cast<double>(rejects) / static_cast<double>(null_stats.size());
  e.type2 = static_cast<double>(accepts) / static_cast<double>(alt_stats.size());
  e.error_sum = e.type1 + e.type2;
  const double se1 = binomial_se(e.type1, null_stats.size());
  const double se2 = binomial_se(e.type2, alt_stats.size());
  e.se = std::sqrt(se1 * se1 + se2 * se2);
  e.best_error_sum = best_error_sum(null_stats, alt_stats);
  return e;
}

namespace detail {

inline PowerEstimate power_at_threshold(const RareWeakParams& params, const ModelSpec& model,
                                        const MonteCarloConfig& cfg, double threshold,
                                        std::uint64_t cell) {
  const auto null_stats = parallel_map(cfg.reps, cfg.workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(cfg.seed, {tag(StreamTag::NullReplicate), cell, k});
    return hc_star(sample_h0(params.n, rng), params.gamma0).hc_star;
  });
  const auto alt_stats = parallel_map(cfg.reps, cfg.workers, [&](std::size_t k) {
    auto rng = RandomStream::derive(cfg.seed, {tag(StreamTag::AltReplicate), cell, k});
    return hc_star(sample_h1(params, model, rng), params.gamma0).hc_star;
  });
  PowerEstimate e = summarize_power(null_stats, alt_stats, threshold, cfg.level);
  e.beta = params.beta;
  e.r = params.r;
  e.n = params.n;
  e.calibration_seed = derive_key(cfg.seed, {tag(StreamTag::NullCalibration), params.n});
  return e;
}

}  // namespace detail

/// Type I error at the calibrated threshold from fresh null replicates, type
/// II error from alternative replicates. `cell` selects the replicate
/// substreams; calibration streams depend on n only.
inline PowerEstimate power_point(const RareWeakParams& params, const ModelSpec& model,
                                 const MonteCarloConfig& cfg, std::uint64_t cell = 0) {
  params.validate();
  model.validate();
  cfg.validate();
  if (!model.sampled()) {
    throw DomainError("no P-value sampler for family " + std::string(family_name(model.family)));
  }
  const double threshold = calibrate_threshold(params.n, params.gamma0, cfg.level,
                                               cfg.calibration_reps, cfg.seed, cfg.workers);
  return detail::power_at_threshold(params, model, cfg, threshold, cell);
}

struct SweepCell {
  double beta = 0.0;
  double r = 0.0;
  PowerEstimate estimate;
  /// rho(beta) for the model, for overlaying the curve; NaN if unavailable.
  double rho = std::numeric_limits<double>::quiet_NaN();
  /// Empty on success; otherwise the failure message of this cell.
  std::string error;

  bool ok() const noexcept { return error.empty(); }
};

/// power_point over a list of (beta, r) cells sharing n and one calibrated
/// threshold. Cell i uses replicate substreams keyed by i, so a one-cell
/// sweep reproduces power_point exactly. A failing cell is reported, not thrown.
inline std::vector<SweepCell> power_sweep(std::span<const std::pair<double, double>> cells,
                                          std::size_t n, double gamma0, const ModelSpec& model,
                                          const MonteCarloConfig& cfg) {
  cfg.validate();
  model.validate();
  const double threshold =
      calibrate_threshold(n, gamma0, cfg.level, cfg.calibration_reps, cfg.seed, cfg.workers);
  std::vector<SweepCell> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    SweepCell c;
    c.beta = cells[i].first;
    c.r = cells[i].second;
    try {
      const RareWeakParams params{n, c.beta, c.r, gamma0};
      params.validate();
      if (!model.sampled()) {
        throw DomainError("no P-value sampler for family " + std::string(family_name(model.family)));
      }
      c.estimate = detail::power_at_threshold(params, model, cfg, threshold, i);
      c.rho = rho(model, c.beta).rho;
    } catch (const std::exception& ex) {
      c.error = ex.what();
      c.estimate.beta = c.beta;
      c.estimate.r = c.r;
      c.estimate.n = n;
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Row-structured model: one Bernoulli(eps_n) per row shifts all k cells by mu_n.

struct RowModelParams {
  std::size_t n = 0;
  std::size_t k = 1;
  double beta = 0.0;
  double r = 0.0;
  double gamma0 = 0.1;

  void validate() const {
    if (k < 1) throw DomainError("k must be at least 1");
    RareWeakParams{n, beta, r, gamma0}.validate();
  }
};

struct RowDraw {
  std::vector<double> naive_pvalues;    // n * k, row-major
  std::vector<double> reduced_z;        // sum_j X_ij / sqrt(k)
  std::vector<double> reduced_pvalues;  // one-sided P-value of reduced_z
  std::vector<std::size_t> planted_rows;
};

/// Under the alternative each row first consumes a planting uniform, then k normals.
inline RowDraw sample_rows(const RowModelParams& params, bool alternative, RandomStream& rng) {
  params.validate();
  const RareWeakParams rw{params.n, params.beta, params.r, params.gamma0};
  const double eps = rw.epsilon();
  const double mu = rw.mu();
  const double root_k = std::sqrt(static_cast<double>(params.k));
  RowDraw d;
  d.naive_pvalues.resize(params.n * params.k);
  d.reduced_z.resize(params.n);
  d.reduced_pvalues.resize(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    const bool planted = alternative && rng.bernoulli(eps);
    if (planted) d.planted_rows.push_back(i);
    const double shift = planted ? mu : 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < params.k; ++j) {
      const double x = shift + rng.normal();
      sum += x;
      d.naive_pvalues[i * params.k + j] = one_sided_pvalue(x);
    }
    d.reduced_z[i] = sum / root_k;
    d.reduced_pvalues[i] = one_sided_pvalue(d.reduced_z[i]);
  }
  return d;
}

struct PairedEstimate {
  PowerEstimate first;
  PowerEstimate second;
};

/// HC on the n k per-cell P-values ("naive") versus HC on the n per-row
/// P-values of the sqrt(k)-scaled row sums ("reduced"), each at its own
/// calibrated threshold.
inline PairedEstimate rows_experiment(const RowModelParams& params, const MonteCarloConfig& cfg) {
  params.validate();
  cfg.validate();
  const std::size_t n_naive = params.n * params.k;
  const double thr_naive = calibrate_threshold(n_naive, params.gamma0, cfg.level,
                                               cfg.calibration_reps, cfg.seed, cfg.workers);
  const double thr_reduced = calibrate_threshold(params.n, params.gamma0, cfg.level,
                                                 cfg.calibration_reps, cfg.seed, cfg.workers);

  auto run = [&](bool alternative, StreamTag stream) {
    return parallel_map(cfg.reps, cfg.workers, [&](std::size_t k) {
      auto rng = RandomStream::derive(cfg.seed, {tag(stream), params.k, k});
      const RowDraw d = sample_rows(params, alternative, rng);
      return std::pair{hc_star(std::span<const double>(d.naive_pvalues), params.gamma0).hc_star,
                       hc_star(std::span<const double>(d.reduced_pvalues), params.gamma0).hc_star};
    });
  };
  const auto null_pairs = run(false, StreamTag::NullReplicate);
  const auto alt_pairs = run(true, StreamTag::AltReplicate);

  auto split = [](const auto& pairs, bool first) {
    std::vector<double> v;
    v.reserve(pairs.size());
    for (const auto& p : pairs) v.push_back(first ? p.first : p.second);
    return v;
  };
  PairedEstimate out{summarize_power(split(null_pairs, true), split(alt_pairs, true), thr_naive, cfg.level),
                     summarize_power(split(null_pairs, false), split(alt_pairs, false), thr_reduced,
                                     cfg.level)};
  for (PowerEstimate* e : {&out.first, &out.second}) {
    e->beta = params.beta;
    e->r = params.r;
  }
  out.first.n = n_naive;
  out.second.n = params.n;
  out.first.calibration_seed = derive_key(cfg.seed, {tag(StreamTag::NullCalibration), n_naive});
  out.second.calibration_seed = derive_key(cfg.seed, {tag(StreamTag::NullCalibration), params.n});
  return out;
}

// ---------------------------------------------------------------------------
// Dense weak shift plus rare strong effects:
//   X_i ~ (1 - eps_n) N(a_n, 1) + eps_n N(mu_n, 1),  a_n = n^-a_exponent.

struct AggregateModelParams {
  std::size_t n = 0;
  double beta = 0.0;
  double r = 0.0;
  double a_exponent = 0.25;
  double gamma0 = 0.1;
  /// Set to force a_n = 0 (the degenerate null-versus-null case).
  bool zero_shift = false;

  void validate() const {
    RareWeakParams{n, beta, r, gamma0}.validate();
    if (!zero_shift && !(a_exponent > 0.0)) throw DomainError("a_exponent must be positive");
  }

  double shift() const {
    return zero_shift ? 0.0 : std::pow(static_cast<double>(n), -a_exponent);
  }
};

struct AggregateResult {
  PowerEstimate hc;
  PowerEstimate chisq;
  /// Chi-square(n) upper-level quantile, a cross-check for the Monte Carlo threshold.
  double chisq_analytic_threshold = 0.0;
};

inline std::vector<double> sample_aggregate(const AggregateModelParams& params, bool alternative,
                                            RandomStream& rng) {
  const RareWeakParams rw{params.n, params.beta, params.r, params.gamma0};
  const double eps = rw.epsilon();
  const double mu = rw.mu();
  const double a = params.shift();
  std::vector<double> x(params.n);
  for (auto& v : x) {
    if (!alternative) {
      v = rng.normal();
    } else {
      const double mean = rng.bernoulli(eps) ? mu : a;
      v = mean + rng.normal();
    }
  }
  return x;
}

inline double sum_of_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

/// HC on one-sided P-values of X_i versus the statistic sum X_i^2, whose
/// threshold comes from its own null Monte Carlo distribution.
inline AggregateResult aggregate_experiment(const AggregateModelParams& params,
                                            const MonteCarloConfig& cfg) {
  params.validate();
  cfg.validate();
  const double thr_hc = calibrate_threshold(params.n, params.gamma0, cfg.level,
                                            cfg.calibration_reps, cfg.seed, cfg.workers);
  double thr_chisq = -std::numeric_limits<double>::infinity();
  if (cfg.level < 1.0) {
    thr_chisq = nearest_rank_quantile(
        parallel_map(cfg.calibration_reps, cfg.workers,
                     [&](std::size_t k) {
                       auto rng = RandomStream::derive(
                           cfg.seed, {tag(StreamTag::ChisqCalibration), params.n, k});
                       return sum_of_squares(sample_aggregate(params, false, rng));
                     }),
        1.0 - cfg.level);
  }

  auto run = [&](bool alternative, StreamTag stream) {
    return parallel_map(cfg.reps, cfg.workers, [&](std::size_t k) {
      auto rng = RandomStream::derive(cfg.seed, {tag(stream), params.n, k});
      const auto x = sample_aggregate(params, alternative, rng);
      std::vector<double> p(x.size());
      std::transform(x.begin(), x.end(), p.begin(), one_sided_pvalue);
      return std::pair{hc_star(std::span<const double>(p), params.gamma0).hc_star,
                       sum_of_squares(x)};
    });
  };
  const auto null_pairs = run(false, StreamTag::NullReplicate);
  const auto alt_pairs = run(true, StreamTag::AltReplicate);

  std::vector<double> h0, h1, c0, c1;
  for (const auto& p : null_pairs) {
    h0.push_back(p.first);
    c0.push_back(p.second);
  }
  for (const auto& p : alt_pairs) {
    h1.push_back(p.first);
    c1.push_back(p.second);
  }
  AggregateResult out;
  out.hc = summarize_power(h0, h1, thr_hc, cfg.level);
  out.chisq = summarize_power(c0, c1, thr_chisq, cfg.level);
  for (PowerEstimate* e : {&out.hc, &out.chisq}) {
    e->beta = params.beta;
    e->r = params.r;
    e->n = params.n;
  }
  out.hc.calibration_seed = derive_key(cfg.seed, {tag(StreamTag::NullCalibration), params.n});
  out.chisq.calibration_seed = derive_key(cfg.seed, {tag(StreamTag::ChisqCalibration), params.n});
  out.chisq_analytic_threshold =
      cfg.level < 1.0
          ? boost::math::quantile(boost::math::chi_squared(static_cast<double>(params.n)), 1.0 - cfg.level)
          : -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace hcsparse
