#pragma once

// The impossibility curve rho(beta): the largest r for which
//   max_{q in (0,1]} (1+q)/2 - alpha(q,r) - beta
// stays negative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hcsparse/errors.hpp"
#include "hcsparse/models.hpp"
#include "hcsparse/parallel.hpp"

namespace hcsparse {

struct InnerMaxResult {
  double value = 0.0;
  double argmax_q = 0.0;
};

struct InnerMaxOptions {
  double q_min = 1e-4;
  std::size_t grid_points = 512;
};

namespace detail {

inline double rho_objective(const ModelSpec& model, double beta, double r, double q) {
  return (1.0 + q) / 2.0 - alpha_unchecked(model, q, r) - beta;
}

}  // namespace detail

/// Coarse grid over [q_min, 1], then golden-section refinement on the two
/// cells around the best grid point. The refined point replaces the grid
/// point only if it is at least as good.
inline InnerMaxResult inner_max(const ModelSpec& model, double beta, double r,
                                const InnerMaxOptions& opt = {}) {
  model.validate();
  if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("r must be non-negative");
  if (!(opt.q_min > 0.0 && opt.q_min < 1.0)) throw DomainError("q_min must lie in (0, 1)");
  if (opt.grid_points < 3) throw DomainError("grid needs at least 3 points");

  const auto f = [&](double q) { return detail::rho_objective(model, beta, r, q); };
  const std::size_t g = opt.grid_points;
  const double h = (1.0 - opt.q_min) / static_cast<double>(g - 1);
  const auto grid_q = [&](std::size_t j) {
    return j + 1 == g ? 1.0 : opt.q_min + static_cast<double>(j) * h;
  };

  std::size_t best_j = 0;
  double best = f(grid_q(0));
  for (std::size_t j = 1; j < g; ++j) {
    const double v = f(grid_q(j));
    if (v > best) {
      best = v;
      best_j = j;
    }
  }

  InnerMaxResult res{best, grid_q(best_j)};

  double a = grid_q(best_j == 0 ? 0 : best_j - 1);
  double b = grid_q(std::min(best_j + 1, g - 1));
  constexpr double inv_phi = 0.61803398874989484820;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double q_ref = fc >= fd ? c : d;
  const double v_ref = std::max(fc, fd);
  if (v_ref >= res.value) res = {v_ref, q_ref};
  return res;
}

struct RhoOptions {
  double tol = 1e-6;
  InnerMaxOptions inner{};
  double r_cap = 1024.0;
};

struct RhoResult {
  double rho = 0.0;
  /// Maximizer of the objective at r = rho.
  double argmax_q = 0.0;
  /// Objective at max(rho - tol, 0); negative unless the zero convention applies.
  double certificate_lo = 0.0;
  /// Objective at rho + tol; non-negative up to solver error.
  double certificate_hi = 0.0;
  /// Set when even r -> 0+ is infeasible, in which case rho is reported as 0.
  bool zero_convention = false;
};

/// rho(beta) by bisection. The objective is non-decreasing in r, so the set
/// of feasible r (objective < 0) is an interval starting at 0. The upper
/// bracket is the first power of two at which the objective is >= 0; the
/// returned value is the feasible end of the final bracket.
inline RhoResult rho(const ModelSpec& model, double beta, const RhoOptions& opt = {}) {
  model.validate();
  if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
  if (!(opt.tol > 0.0)) throw DomainError("tol must be positive");

  const auto g = [&](double r) { return inner_max(model, beta, r, opt.inner).value; };

  RhoResult out;
  if (g(0.0) >= 0.0) {
    out.zero_convention = true;
    out.argmax_q = inner_max(model, beta, 0.0, opt.inner).argmax_q;
    out.certificate_lo = g(0.0);
    out.certificate_hi = g(opt.tol);
    return out;
  }

  double hi = 1.0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > opt.r_cap) {
      throw BracketError("no sign change of the inner maximum below the r cap", opt.r_cap);
    }
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  while (hi - lo > opt.tol / 2.0) {
    const double mid = lo + (hi - lo) / 2.0;
    if (g(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.rho = lo;
  out.argmax_q = inner_max(model, beta, lo, opt.inner).argmax_q;
  out.certificate_lo = g(std::max(lo - opt.tol, 0.0));
  out.certificate_hi = g(lo + opt.tol);
  return out;
}

/// Closed form of rho for the normal means family:
/// beta - 1/2 below 3/4, (1 - sqrt(1 - beta))^2 from 3/4 on. The two branches
/// meet at beta = 3/4 (interior optimum q* = 4r versus the q = 1 endpoint).
inline double tilde_rho_normal(double beta) {
  if (!(beta > 0.5 && beta < 1.0)) throw DomainError("beta must lie in (1/2, 1)");
  if (beta < 0.75) return beta - 0.5;
  const double s = 1.0 - std::sqrt(1.0 - beta);
  return s * s;
}

enum class BoundaryMethod { Numeric, ClosedForm };

inline const char* method_name(BoundaryMethod m) noexcept {
  return m == BoundaryMethod::Numeric ? "numeric" : "closed-form";
}

struct BoundaryCurve {
  ModelSpec model;
  BoundaryMethod method = BoundaryMethod::Numeric;
  std::vector<double> betas;
  std::vector<RhoResult> points;
};

/// Numeric curve over a beta grid; points are computed independently and
/// stored in grid order regardless of the worker count.
inline BoundaryCurve boundary_curve(const ModelSpec& model, std::span<const double> betas,
                                    const RhoOptions& opt = {}, unsigned workers = 0) {
  BoundaryCurve curve{model, BoundaryMethod::Numeric, {betas.begin(), betas.end()}, {}};
  curve.points = parallel_map(betas.size(), workers,
                              [&](std::size_t i) { return rho(model, betas[i], opt); });
  return curve;
}

/// Closed-form curve (NormalMeans only), with the same certificates as the
/// numeric path so the two can be compared row by row.
inline BoundaryCurve closed_form_curve(std::span<const double> betas, const RhoOptions& opt = {}) {
  const ModelSpec model = ModelSpec::normal_means();
  BoundaryCurve curve{model, BoundaryMethod::ClosedForm, {betas.begin(), betas.end()}, {}};
  for (double beta : betas) {
    RhoResult p;
    p.rho = tilde_rho_normal(beta);
    p.argmax_q = std::min(4.0 * p.rho, 1.0);
    p.certificate_lo = inner_max(model, beta, std::max(p.rho - opt.tol, 0.0), opt.inner).value;
    p.certificate_hi = inner_max(model, beta, p.rho + opt.tol, opt.inner).value;
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace hcsparse
