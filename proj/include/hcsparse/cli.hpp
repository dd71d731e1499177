#pragma once

// Command-line front end. `run` parses argv, dispatches to one subcommand and
// writes its results; exit code 0 on success, 1 on usage errors, 2 on
// numeric or domain failures.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcsparse/boundary.hpp"
#include "hcsparse/coupling.hpp"
#include "hcsparse/errors.hpp"
#include "hcsparse/hc.hpp"
#include "hcsparse/io.hpp"
#include "hcsparse/models.hpp"
#include "hcsparse/montecarlo.hpp"

namespace hcsparse::cli {

enum class OutputFormat { csv, jsonl };

/// Settings shared by every subcommand.
struct RunConfig {
  std::uint64_t master_seed = 1;
  std::string output_path;  // empty: standard output
  OutputFormat output_format = OutputFormat::csv;
  unsigned workers = 0;
};

inline constexpr const char* kSeedEnv = "HCSPARSE_SEED";

namespace detail {

/// A failed range check on a named flag.
inline void require(bool ok, const std::string& flag, const std::string& what) {
  if (!ok) throw DomainError(flag + ": " + what);
}

inline ModelSpec make_model(const std::string& name, double sigma2) {
  const auto family = parse_family(name);
  require(family.has_value(), "--model", "unknown model '" + name + "'");
  require(sigma2 > 0.0, "--sigma2", "must be positive");
  return ModelSpec{*family, sigma2};
}

/// Echo of every configurable option of a subcommand, one `name=value` per
/// line, in declaration order. Options that do not change results (output
/// path, worker count) are excluded so reruns stay byte-identical.
inline std::string echo_config(const CLI::App& sub) {
  std::ostringstream os;
  for (const CLI::Option* opt : sub.get_options()) {
    if (!opt->get_configurable() || opt == sub.get_help_ptr() || opt == sub.get_help_all_ptr()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else if (!opt->get_envname().empty() && std::getenv(opt->get_envname().c_str()) != nullptr) {
      value = std::getenv(opt->get_envname().c_str());
    } else {
      value = opt->get_default_str();
    }
    os << opt->get_single_name() << '=' << value << '\n';
  }
  return os.str();
}

inline nlohmann::json echo_json(const CLI::App& sub) {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(echo_config(sub));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

inline std::vector<std::string> power_cells(const PowerEstimate& e) {
  return {csv_number(e.beta),      csv_number(e.r),         std::to_string(e.n),
          std::to_string(e.reps),  csv_number(e.level),     csv_number(e.threshold),
          csv_number(e.type1),     csv_number(e.type2),     csv_number(e.error_sum),
          csv_number(e.se),        csv_number(e.best_error_sum)};
}

inline const char* kPowerHeader = "beta,r,n,reps,level,threshold,type1,type2,error_sum,se,best_error_sum";

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Parses `args` (args[0] is the program name) and runs the selected subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Higher Criticism for sparse mixtures: statistic, impossibility boundary, "
               "coupled Monte Carlo diagnostics",
               "hcsparse"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kVersion));

  RunConfig rc;
  std::string format_name = "jsonl";

  auto add_common = [&](CLI::App* sub, bool seeded) {
    if (seeded) {
      sub->add_option("--seed", rc.master_seed, "Master seed (environment: HCSPARSE_SEED)")
          ->envname(kSeedEnv);
    }
    sub->add_option("--output,-o", rc.output_path, "Output file (default: standard output)")
        ->configurable(false);
    sub->add_option("--workers", rc.workers, "Worker threads, 0 = hardware concurrency")
        ->configurable(false);
  };
  auto add_model = [](CLI::App* sub, std::string& model, double& sigma2) {
    sub->add_option("--model", model,
                    "normal-means | two-sample-normal | small-poisson | heteroscedastic");
    sub->add_option("--sigma2", sigma2, "Effect variance (heteroscedastic only)");
  };

  // alpha
  std::string model_name = "normal-means";
  double sigma2 = 1.0;
  double q = 1.0;
  double r = 0.25;
  auto* alpha_cmd = app.add_subcommand("alpha", "Tail exponent alpha(q, r) of a model family");
  add_model(alpha_cmd, model_name, sigma2);
  alpha_cmd->add_option("--q", q, "Scale exponent q in (0, 1]");
  alpha_cmd->add_option("--r", r, "Signal strength r > 0");
  add_common(alpha_cmd, false);

  // hc
  std::string input_path;
  double gamma0 = 0.1;
  auto* hc_cmd = app.add_subcommand("hc", "HC* of a P-value file");
  hc_cmd->add_option("--input", input_path, "Whitespace-separated P-values")->required();
  hc_cmd->add_option("--gamma0", gamma0, "Truncation fraction in (0, 1)");
  add_common(hc_cmd, false);

  // boundary
  std::string beta_grid = "0.55:0.95:0.05";
  double tol = 1e-6;
  double q_min = 1e-4;
  std::string method = "numeric";
  auto* boundary_cmd = app.add_subcommand("boundary", "Impossibility curve rho(beta)");
  add_model(boundary_cmd, model_name, sigma2);
  boundary_cmd->add_option("--beta-grid", beta_grid, "Grid lo:hi:step over (1/2, 1)");
  boundary_cmd->add_option("--tol", tol, "Bisection tolerance in r");
  boundary_cmd->add_option("--q-min", q_min, "Lower end of the q search interval");
  boundary_cmd->add_option("--method", method, "numeric | closed-form | both");
  add_common(boundary_cmd, false);

  // power
  std::string r_grid = "0.05:1:0.05";
  std::size_t n = 10000;
  MonteCarloConfig mc;
  auto* power_cmd = app.add_subcommand("power", "Monte Carlo error sums over a (beta, r) grid");
  add_model(power_cmd, model_name, sigma2);
  power_cmd->add_option("--beta-grid", beta_grid, "Grid lo:hi:step over (1/2, 1)");
  power_cmd->add_option("--r-grid", r_grid, "Grid lo:hi:step of r >= 0");
  power_cmd->add_option("--n", n, "Number of P-values");
  power_cmd->add_option("--gamma0", gamma0, "Truncation fraction in (0, 1)");
  power_cmd->add_option("--level", mc.level, "Test level in (0, 1]");
  power_cmd->add_option("--reps", mc.reps, "Replicates per cell and hypothesis");
  power_cmd->add_option("--calibration-reps", mc.calibration_reps, "Null replicates for the threshold");
  add_common(power_cmd, true);

  // couple
  double beta = 0.7;
  double r_couple = 0.1;
  std::size_t draws = 1000;
  double slack = 1e-9;
  double gap_c = 0.5;
  auto* couple_cmd = app.add_subcommand("couple", "Per-draw coupling diagnostics (JSON lines)");
  add_model(couple_cmd, model_name, sigma2);
  couple_cmd->add_option("--n", n, "Number of P-values");
  couple_cmd->add_option("--beta", beta, "Rarity in (1/2, 1)");
  couple_cmd->add_option("--r", r_couple, "Signal strength r >= 0");
  couple_cmd->add_option("--gamma0", gamma0, "Truncation fraction in (0, 1)");
  couple_cmd->add_option("--draws", draws, "Number of coupled draws");
  couple_cmd->add_option("--slack", slack, "Absolute slack on the HC-difference bound");
  couple_cmd->add_option("--gap-c", gap_c, "c in the summary estimate of Pr(HC1 > HC0 + c)");
  couple_cmd->add_option("--format", format_name, "jsonl | csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  add_common(couple_cmd, true);

  // rows
  std::size_t k = 16;
  double r_rows = 0.15;
  auto* rows_cmd = app.add_subcommand("rows", "Per-cell versus per-row P-values in the row model");
  rows_cmd->add_option("--n", n, "Number of rows");
  rows_cmd->add_option("--k", k, "Cells per row");
  rows_cmd->add_option("--beta", beta, "Rarity in (1/2, 1)");
  rows_cmd->add_option("--r", r_rows, "Signal strength r >= 0");
  rows_cmd->add_option("--gamma0", gamma0, "Truncation fraction in (0, 1)");
  rows_cmd->add_option("--level", mc.level, "Test level in (0, 1]");
  rows_cmd->add_option("--reps", mc.reps, "Replicates per hypothesis");
  rows_cmd->add_option("--calibration-reps", mc.calibration_reps, "Null replicates for the threshold");
  add_common(rows_cmd, true);

  // aggregate
  double r_agg = 0.05;
  double a_exponent = 0.25;
  auto* agg_cmd = app.add_subcommand("aggregate", "HC versus sum of squares under a dense weak shift");
  agg_cmd->add_option("--n", n, "Number of observations");
  agg_cmd->add_option("--beta", beta, "Rarity in (1/2, 1)");
  agg_cmd->add_option("--r", r_agg, "Signal strength r >= 0");
  agg_cmd->add_option("--a-exponent", a_exponent, "Dense shift a_n = n^-a_exponent");
  agg_cmd->add_option("--gamma0", gamma0, "Truncation fraction in (0, 1)");
  agg_cmd->add_option("--level", mc.level, "Test level in (0, 1]");
  agg_cmd->add_option("--reps", mc.reps, "Replicates per hypothesis");
  agg_cmd->add_option("--calibration-reps", mc.calibration_reps, "Null replicates for the thresholds");
  add_common(agg_cmd, true);

  // diagnose-spacings
  std::size_t spacing_n = 1000;
  std::size_t spacing_reps = 10000;
  double x = 1.0;
  auto* spacing_cmd = app.add_subcommand("diagnose-spacings",
                                         "Law of the minimal uniform spacing versus Exp(1)");
  spacing_cmd->add_option("--n", spacing_n, "Sample size");
  spacing_cmd->add_option("--reps", spacing_reps, "Replicates");
  spacing_cmd->add_option("--x", x, "Point for the exact tail check (1 - x/n)^n");
  add_common(spacing_cmd, true);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help / --version
      app.exit(e, out, err);
      return 0;
    }
    err << "usage error: " << e.what() << '\n';
    err << "run with --help for the list of subcommands and flags\n";
    return 1;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  auto open_sink = [&] {
    if (!rc.output_path.empty()) {
      file.open(rc.output_path, std::ios::binary | std::ios::trunc);
      if (!file) throw DomainError("--output: cannot open '" + rc.output_path + "'");
      sink = &file;
    }
  };

  try {
    using detail::require;
    const CLI::App* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();

    if (cmd == "alpha") {
      const ModelSpec model = detail::make_model(model_name, sigma2);
      require(q > 0.0 && q <= 1.0, "--q", "must lie in (0, 1]");
      require(r > 0.0, "--r", "must be positive");
      const double a = alpha(model, q, r);
      open_sink();
      write_csv_preamble(*sink, cmd, 0, detail::echo_config(*sub));
      *sink << "model,sigma2,q,r,alpha\n";
      write_csv_row(*sink, {std::string(family_name(model.family)), csv_number(model.sigma2),
                            csv_number(q), csv_number(r), csv_number(a)});
    } else if (cmd == "hc") {
      require(gamma0 > 0.0 && gamma0 < 1.0, "--gamma0", "must lie in (0, 1)");
      std::ifstream in(input_path);
      require(static_cast<bool>(in), "--input", "cannot open '" + input_path + "'");
      PValueSample sample;
      try {
        sample = read_pvalues(in);
      } catch (const ParseError& e) {
        throw ParseError(std::string("--input: ") + e.what(), e.line(), e.column());
      }
      const HCEvaluation ev = hc_star(sample, gamma0);
      open_sink();
      write_csv_preamble(*sink, cmd, 0, detail::echo_config(*sub));
      *sink << "n,gamma0,i_max,hc_star,argmax_index\n";
      write_csv_row(*sink, {std::to_string(ev.n), csv_number(gamma0),
                            std::to_string(hc_index_limit(ev.n, gamma0)), csv_number(ev.hc_star),
                            std::to_string(ev.argmax_index)});
    } else if (cmd == "boundary") {
      const ModelSpec model = detail::make_model(model_name, sigma2);
      require(method == "numeric" || method == "closed-form" || method == "both", "--method",
              "must be numeric, closed-form or both");
      require(tol > 0.0, "--tol", "must be positive");
      require(q_min > 0.0 && q_min < 1.0, "--q-min", "must lie in (0, 1)");
      require(method == "numeric" || model.family == Family::NormalMeans, "--method",
              "closed form exists only for normal-means");
      std::vector<double> betas;
      try {
        betas = parse_grid(beta_grid);
      } catch (const DomainError& e) {
        throw DomainError(std::string("--beta-grid: ") + e.what());
      }
      for (double b : betas) require(b > 0.5 && b < 1.0, "--beta-grid", "values must lie in (1/2, 1)");
      RhoOptions opt;
      opt.tol = tol;
      opt.inner.q_min = q_min;

      std::vector<BoundaryCurve> curves;
      if (method != "closed-form") curves.push_back(boundary_curve(model, betas, opt, rc.workers));
      if (method != "numeric") curves.push_back(closed_form_curve(betas, opt));
      open_sink();
      write_csv_preamble(*sink, cmd, 0, detail::echo_config(*sub));
      *sink << "model,beta,rho,method,argmax_q,certificate_lo,certificate_hi\n";
      for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.betas.size(); ++i) {
          const RhoResult& p = c.points[i];
          if (p.zero_convention) {
            err << "note: beta=" << csv_number(c.betas[i])
                << " is infeasible even as r -> 0; rho reported as 0\n";
          }
          write_csv_row(*sink, {c.model.describe(), csv_number(c.betas[i]), csv_number(p.rho),
                                method_name(c.method), csv_number(p.argmax_q),
                                csv_number(p.certificate_lo), csv_number(p.certificate_hi)});
        }
      }
    } else if (cmd == "power") {
      const ModelSpec model = detail::make_model(model_name, sigma2);
      require(model.sampled(), "--model", "power needs a sampled family (normal-means, heteroscedastic)");
      require(n >= 1, "--n", "must be at least 1");
      require(gamma0 > 0.0 && gamma0 < 1.0, "--gamma0", "must lie in (0, 1)");
      require(mc.level > 0.0 && mc.level <= 1.0, "--level", "must lie in (0, 1]");
      require(mc.reps >= 1, "--reps", "must be at least 1");
      require(mc.calibration_reps >= 100, "--calibration-reps", "must be at least 100");
      std::vector<double> betas, rs;
      try {
        betas = parse_grid(beta_grid);
      } catch (const DomainError& e) {
        throw DomainError(std::string("--beta-grid: ") + e.what());
      }
      try {
        rs = parse_grid(r_grid);
      } catch (const DomainError& e) {
        throw DomainError(std::string("--r-grid: ") + e.what());
      }
      std::vector<std::pair<double, double>> cells;
      for (double b : betas)
        for (double rr : rs) cells.emplace_back(b, rr);
      mc.seed = rc.master_seed;
      mc.workers = rc.workers;
      const auto sweep = power_sweep(cells, n, gamma0, model, mc);
      open_sink();
      write_csv_preamble(*sink, cmd, rc.master_seed, detail::echo_config(*sub));
      *sink << detail::kPowerHeader << ",rho,status\n";
      int failures = 0;
      for (const auto& c : sweep) {
        auto row = detail::power_cells(c.estimate);
        row.push_back(csv_number(c.rho));
        row.push_back(c.ok() ? "ok" : "failed");
        write_csv_row(*sink, row);
        if (!c.ok()) {
          ++failures;
          err << "cell beta=" << csv_number(c.beta) << " r=" << csv_number(c.r) << ": " << c.error << '\n';
        }
      }
      if (failures > 0) return 2;
    } else if (cmd == "couple") {
      const ModelSpec model = detail::make_model(model_name, sigma2);
      require(model.sampled(), "--model", "coupling needs a sampled family (normal-means, heteroscedastic)");
      require(n >= 1, "--n", "must be at least 1");
      require(beta > 0.5 && beta < 1.0, "--beta", "must lie in (1/2, 1)");
      require(r_couple >= 0.0, "--r", "must be non-negative");
      require(gamma0 > 0.0 && gamma0 < 1.0, "--gamma0", "must lie in (0, 1)");
      require(slack >= 0.0, "--slack", "must be non-negative");
      require(gap_c > 0.0, "--gap-c", "must be positive");
      rc.output_format = format_name == "csv" ? OutputFormat::csv : OutputFormat::jsonl;
      const RareWeakParams params{n, beta, r_couple, gamma0};
      const auto records = coupled_diagnostics(params, model, draws, rc.master_seed, slack, rc.workers);
      open_sink();
      if (rc.output_format == OutputFormat::jsonl) {
        nlohmann::json prov = {{"version", kVersion},
                               {"command", cmd},
                               {"seed", rc.master_seed},
                               {"config", detail::echo_json(*sub)}};
        *sink << nlohmann::json{{"provenance", prov}}.dump() << '\n';
      } else {
        write_csv_preamble(*sink, cmd, rc.master_seed, detail::echo_config(*sub));
        *sink << "seed,n,beta,r,m,hc0,hc1,sup_bound,ordering_ok,bound_ok,sup_bound_qbar\n";
      }
      std::size_t applicable = 0, violations = 0, ordered = 0, gaps = 0;
      for (const auto& rec : records) {
        const auto& d = rec.diag;
        applicable += d.applicable() ? 1 : 0;
        violations += d.bound_ok.has_value() && !*d.bound_ok ? 1 : 0;
        ordered += d.ordering_ok ? 1 : 0;
        gaps += d.hc1 > d.hc0 + gap_c ? 1 : 0;
        if (rc.output_format == OutputFormat::jsonl) {
          nlohmann::json row = {{"seed", rec.seed},
                                {"n", n},
                                {"beta", beta},
                                {"r", r_couple},
                                {"m", rec.m},
                                {"hc0", d.hc0},
                                {"hc1", d.hc1},
                                {"sup_bound", detail::optional_json(d.sup_bound)},
                                {"ordering_ok", d.ordering_ok},
                                {"bound_ok", d.bound_ok ? nlohmann::json(*d.bound_ok) : nlohmann::json(nullptr)},
                                {"sup_bound_qbar", detail::optional_json(d.sup_bound_qbar)}};
          *sink << row.dump() << '\n';
        } else {
          auto opt_num = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
          write_csv_row(*sink, {std::to_string(rec.seed), std::to_string(n), csv_number(beta),
                                csv_number(r_couple), std::to_string(rec.m), csv_number(d.hc0),
                                csv_number(d.hc1), opt_num(d.sup_bound), d.ordering_ok ? "1" : "0",
                                d.bound_ok ? (*d.bound_ok ? "1" : "0") : "", opt_num(d.sup_bound_qbar)});
        }
      }
      const double total = static_cast<double>(std::max<std::size_t>(records.size(), 1));
      err << "draws=" << records.size() << " ordering_ok=" << ordered << " applicable=" << applicable
          << " skipped=" << records.size() - applicable << " violations=" << violations
          << " gap_fraction(c=" << csv_number(gap_c) << ")=" << csv_number(static_cast<double>(gaps) / total)
          << '\n';
      if (violations > 0) return 2;
    } else if (cmd == "rows") {
      require(n >= 1, "--n", "must be at least 1");
      require(k >= 1, "--k", "must be at least 1");
      require(beta > 0.5 && beta < 1.0, "--beta", "must lie in (1/2, 1)");
      require(r_rows >= 0.0, "--r", "must be non-negative");
      require(gamma0 > 0.0 && gamma0 < 1.0, "--gamma0", "must lie in (0, 1)");
      require(mc.level > 0.0 && mc.level <= 1.0, "--level", "must lie in (0, 1]");
      require(mc.calibration_reps >= 100, "--calibration-reps", "must be at least 100");
      mc.seed = rc.master_seed;
      mc.workers = rc.workers;
      const auto res = rows_experiment(RowModelParams{n, k, beta, r_rows, gamma0}, mc);
      open_sink();
      write_csv_preamble(*sink, cmd, rc.master_seed, detail::echo_config(*sub));
      *sink << "variant," << detail::kPowerHeader << '\n';
      for (const auto& [name, e] : {std::pair{"naive", res.first}, std::pair{"reduced", res.second}}) {
        auto row = detail::power_cells(e);
        row.insert(row.begin(), name);
        write_csv_row(*sink, row);
      }
    } else if (cmd == "aggregate") {
      require(n >= 1, "--n", "must be at least 1");
      require(beta > 0.5 && beta < 1.0, "--beta", "must lie in (1/2, 1)");
      require(r_agg >= 0.0, "--r", "must be non-negative");
      require(a_exponent > 0.0, "--a-exponent", "must be positive");
      require(gamma0 > 0.0 && gamma0 < 1.0, "--gamma0", "must lie in (0, 1)");
      require(mc.level > 0.0 && mc.level <= 1.0, "--level", "must lie in (0, 1]");
      require(mc.calibration_reps >= 100, "--calibration-reps", "must be at least 100");
      mc.seed = rc.master_seed;
      mc.workers = rc.workers;
      const auto res = aggregate_experiment(AggregateModelParams{n, beta, r_agg, a_exponent, gamma0}, mc);
      open_sink();
      write_csv_preamble(*sink, cmd, rc.master_seed, detail::echo_config(*sub));
      *sink << "# chisq_analytic_threshold: " << csv_number(res.chisq_analytic_threshold) << '\n';
      *sink << "variant," << detail::kPowerHeader << '\n';
      for (const auto& [name, e] : {std::pair{"hc", res.hc}, std::pair{"chisq", res.chisq}}) {
        auto row = detail::power_cells(e);
        row.insert(row.begin(), name);
        write_csv_row(*sink, row);
      }
    } else if (cmd == "diagnose-spacings") {
      require(spacing_n >= 1, "--n", "must be at least 1");
      require(spacing_reps >= 1, "--reps", "must be at least 1");
      require(x >= 0.0, "--x", "must be non-negative");
      const auto stats = spacing_min_statistics(spacing_n, spacing_reps, rc.master_seed, rc.workers);
      const auto ks = spacing_law_check(spacing_n, spacing_reps, rc.master_seed, rc.workers);
      std::size_t exceed = 0;
      for (double s : stats) exceed += s > x ? 1 : 0;
      const double frac = static_cast<double>(exceed) / static_cast<double>(stats.size());
      const double nn = static_cast<double>(spacing_n);
      const double exact = x >= nn ? 0.0 : std::pow(1.0 - x / nn, nn);
      open_sink();
      write_csv_preamble(*sink, cmd, rc.master_seed, detail::echo_config(*sub));
      *sink << "n,reps,ks_distance,x,exceed_fraction,exact_probability,se\n";
      write_csv_row(*sink, {std::to_string(spacing_n), std::to_string(spacing_reps),
                            ks ? csv_number(*ks) : "nan", csv_number(x), csv_number(frac),
                            csv_number(exact), csv_number(binomial_se(exact, spacing_reps))});
    }
    sink->flush();
    return 0;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const BracketError& e) {
    err << "error: " << e.what() << " (cap " << e.cap() << ")\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace hcsparse::cli
