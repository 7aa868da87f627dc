#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnum/baselines.hpp"
#include "dnum/random_network.hpp"
#include "dnum/trace_io.hpp"

namespace dnum {

/**
 * One comparison experiment. Spec document:
 *
 *   {"trials": 50, "links": 15, "sources": 8, "bernoulli_p": 0.5, "seed": 7,
 *    "methods": ["newton", "subgradient", "diagonal_scaled"],
 *    "stepsizes": {"subgradient": 0.01, "diagonal_scaled": 0.3},
 *    "band": 0.05, "band_hold": 50, "feas_tol": 0.001, "max_iters": 200000,
 *    "newton": {"mu": 1, "p": 0.001, "epsilon": 0.0001, "V": 0.12, "a": 0.01},
 *    "output": {"summary": "summary.json", "traces": "traces"}}
 *
 * Everything except trials, links, sources and bernoulli_p has a default.
 * "stepsizes" may instead name a JSON file holding that object.
 */
struct ExperimentSpec {
  int trials = 0;
  int links = 0;
  int sources = 0;
  double bernoulli_p = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::string> methods{"newton", "subgradient", "diagonal_scaled"};
  std::map<std::string, double> stepsizes;
  double band = 0.05;
  int band_hold = 50;
  double feas_tol = 1e-3;
  std::int64_t max_iters = 200'000;
  SolverConfig newton;
  InstanceDistribution distribution;
  std::string summary_path;
  std::string trace_dir;

  /// Network seed of a trial.
  std::uint64_t trial_seed(int trial) const {
    return seed + static_cast<std::uint64_t>(trial);
  }
};

inline bool is_baseline(const std::string& method) {
  return method == "subgradient" || method == "diagonal_scaled";
}

inline BaselineMethod baseline_from_name(const std::string& method) {
  if (method == "subgradient") {
    return BaselineMethod::Subgradient;
  }
  if (method == "diagonal_scaled") {
    return BaselineMethod::DiagonalScaled;
  }
  throw Error("unknown baseline '" + method + "'");
}

inline std::map<std::string, double> stepsizes_from_json(const Json& j) {
  std::map<std::string, double> out;
  for (const auto& [name, value] : j.items()) {
    baseline_from_name(name);
    out[name] = value.get<double>();
  }
  return out;
}

/// base_dir resolves relative file references inside the spec.
inline ExperimentSpec spec_from_json(const Json& j,
                                     const std::filesystem::path& base_dir = {}) {
  ExperimentSpec spec;
  spec.trials = j.at("trials").get<int>();
  spec.links = j.at("links").get<int>();
  spec.sources = j.at("sources").get<int>();
  spec.bernoulli_p = j.at("bernoulli_p").get<double>();
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("methods")) {
    spec.methods = j.at("methods").get<std::vector<std::string>>();
  }
  if (j.contains("stepsizes")) {
    const Json& s = j.at("stepsizes");
    if (s.is_string()) {
      std::filesystem::path file = s.get<std::string>();
      if (file.is_relative()) {
        file = base_dir / file;
      }
      spec.stepsizes = stepsizes_from_json(read_json_file(file.string()));
    } else {
      spec.stepsizes = stepsizes_from_json(s);
    }
  }
  spec.band = j.value("band", spec.band);
  spec.band_hold = j.value("band_hold", spec.band_hold);
  spec.feas_tol = j.value("feas_tol", spec.feas_tol);
  spec.max_iters = j.value("max_iters", spec.max_iters);
  if (j.contains("newton")) {
    const Json& n = j.at("newton");
    spec.newton.mu = n.value("mu", spec.newton.mu);
    spec.newton.p = n.value("p", spec.newton.p);
    spec.newton.epsilon = n.value("epsilon", spec.newton.epsilon);
    spec.newton.V = n.value("V", spec.newton.V);
    if (n.contains("b")) {
      spec.newton.b = n.at("b").get<double>();
    }
    spec.newton.a = n.value("a", spec.newton.a);
  }
  if (j.contains("output")) {
    const Json& o = j.at("output");
    spec.summary_path = o.value("summary", std::string{});
    spec.trace_dir = o.value("traces", std::string{});
  }

  if (spec.trials <= 0 || spec.links <= 0 || spec.sources <= 0) {
    throw Error("trials, links and sources must be positive");
  }
  if (!(spec.bernoulli_p > 0.0 && spec.bernoulli_p <= 1.0)) {
    throw Error("bernoulli_p must lie in (0, 1]");
  }
  for (const std::string& m : spec.methods) {
    if (m == "newton") {
      continue;
    }
    baseline_from_name(m);
    if (!spec.stepsizes.contains(m)) {
      throw Error("no stepsize given for '" + m + "'");
    }
  }
  validate(spec.newton);
  return spec;
}

/// Primal steps plus dual iterations spent before the iterate that starts the
/// final run of in-band iterates; -1 if the last iterate is outside the band.
inline std::int64_t newton_band_entry(const std::vector<IterationRecord>& trace,
                                      double reference, double band) {
  std::int64_t entry = -1;
  std::vector<std::int64_t> spent(trace.size());
  std::int64_t total = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    spent[k] = total;
    total += trace[k].dual_iters + (trace[k].stepsize > 0.0 ? 1 : 0);
  }
  for (std::size_t k = trace.size(); k-- > 0;) {
    if (std::abs(trace[k].h - reference) > band * std::abs(reference)) {
      break;
    }
    entry = spent[k];
  }
  return entry;
}

struct MethodOutcome {
  std::string method;
  bool ok = false;
  std::string error;
  /// Counted iterations to the band criterion; -1 if never reached.
  std::int64_t band_count = -1;
  /// Counted iterations until the method stopped.
  std::int64_t total_count = 0;
  std::string status;
  double final_h = 0.0;
  double relative_error = 0.0;
  /// Smallest slack seen over the run (negative means a capacity was exceeded).
  double min_slack = 0.0;
  double final_min_slack = 0.0;
};

struct TrialOutcome {
  int trial = 0;
  std::uint64_t seed = 0;
  double reference_h = 0.0;
  std::string error;
  std::vector<MethodOutcome> methods;
};

namespace detail {

inline MethodOutcome run_newton_trial(const Network& net, const ExperimentSpec& spec,
                                      double reference, const std::string& trace_stem) {
  MethodOutcome out;
  out.method = "newton";
  TwoPassResult run = two_pass_solve(net, spec.newton);
  std::vector<IterationRecord> joined = run.first.trace;
  joined.insert(joined.end(), run.second.trace.begin(), run.second.trace.end());
  out.ok = true;
  out.band_count = newton_band_entry(joined, reference, spec.band);
  out.total_count = run.first.counted_iterations() + run.second.counted_iterations();
  out.status = run.first.converged && run.second.converged ? "converged"
                                                           : "iteration_cap";
  out.final_h = eval_h(net, run.x);
  out.relative_error = std::abs(out.final_h - reference) / std::abs(reference);
  out.min_slack = std::numeric_limits<double>::infinity();
  for (const IterationRecord& r : joined) {
    out.min_slack = std::min(out.min_slack, r.min_slack);
  }
  out.final_min_slack = min_slack(net, run.x);
  if (!trace_stem.empty()) {
    write_text_file(trace_stem + "_pass1.csv", trace_to_csv(run.first.trace));
    write_text_file(trace_stem + "_pass2.csv", trace_to_csv(run.second.trace));
  }
  return out;
}

inline MethodOutcome run_baseline_trial(const Network& net, const ExperimentSpec& spec,
                                        const std::string& method, double reference,
                                        const std::string& trace_stem) {
  MethodOutcome out;
  out.method = method;
  FirstOrderConfig config;
  config.stepsize = spec.stepsizes.at(method);
  config.max_iters = spec.max_iters;
  config.band = spec.band;
  config.band_hold = spec.band_hold;
  config.feas_tol = spec.feas_tol;
  config.reference = reference;
  FirstOrderResult run = run_baseline(baseline_from_name(method), net, config);
  out.ok = true;
  out.band_count =
      run.status == FirstOrderStatus::Converged ? run.band_entry : std::int64_t{-1};
  out.total_count = run.iterations;
  out.status = status_name(run.status);
  out.final_h = detail::negative_utility(net, run.rates);
  out.relative_error = std::abs(out.final_h - reference) / std::abs(reference);
  out.min_slack = std::numeric_limits<double>::infinity();
  for (const FirstOrderRecord& r : run.trace) {
    out.min_slack = std::min(out.min_slack, r.min_slack);
  }
  out.final_min_slack = (net.capacities() - net.link_loads(run.rates)).minCoeff();
  if (!trace_stem.empty()) {
    write_text_file(trace_stem + ".csv", trace_to_csv(run, config.stepsize));
  }
  return out;
}

}  // namespace detail

inline TrialOutcome run_trial(const ExperimentSpec& spec, int trial) {
  TrialOutcome out;
  out.trial = trial;
  out.seed = spec.trial_seed(trial);
  Network net;
  try {
    net = random_network(spec.links, spec.sources, spec.bernoulli_p, out.seed,
                         spec.distribution);
    out.reference_h = solve_utility_reference(net).h;
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  for (const std::string& method : spec.methods) {
    std::string stem;
    if (!spec.trace_dir.empty()) {
      stem = (std::filesystem::path(spec.trace_dir) /
              (method + "_trial" + std::to_string(trial)))
                 .string();
    }
    try {
      out.methods.push_back(
          method == "newton"
              ? detail::run_newton_trial(net, spec, out.reference_h, stem)
              : detail::run_baseline_trial(net, spec, method, out.reference_h, stem));
    } catch (const std::exception& e) {
      MethodOutcome failed;
      failed.method = method;
      failed.error = e.what();
      failed.status = "error";
      out.methods.push_back(std::move(failed));
    }
  }
  return out;
}

struct MethodSummary {
  std::string method;
  int reached = 0;
  int failed = 0;
  double mean = 0.0;
  double median = 0.0;
  double geometric_mean = 0.0;
  std::int64_t min = 0;
  std::int64_t max = 0;
  double mean_total = 0.0;
  double mean_relative_error = 0.0;
  /// log10 of each reached band count, in trial order.
  std::vector<double> log10_counts;
};

struct ComparisonResult {
  std::vector<TrialOutcome> trials;
  std::vector<MethodSummary> summary;
};

inline std::vector<MethodSummary> summarize(const ExperimentSpec& spec,
                                            const std::vector<TrialOutcome>& trials) {
  std::vector<MethodSummary> out;
  for (const std::string& method : spec.methods) {
    MethodSummary s;
    s.method = method;
    std::vector<double> counts;
    double log_sum = 0.0;
    double total_sum = 0.0;
    double error_sum = 0.0;
    for (const TrialOutcome& t : trials) {
      const MethodOutcome* m = nullptr;
      for (const MethodOutcome& candidate : t.methods) {
        if (candidate.method == method) {
          m = &candidate;
        }
      }
      if (m == nullptr || !m->ok || m->band_count < 0) {
        ++s.failed;
        continue;
      }
      double c = static_cast<double>(m->band_count);
      counts.push_back(c);
      s.log10_counts.push_back(std::log10(std::max(c, 1.0)));
      log_sum += std::log(std::max(c, 1.0));
      total_sum += static_cast<double>(m->total_count);
      error_sum += m->relative_error;
    }
    s.reached = static_cast<int>(counts.size());
    if (!counts.empty()) {
      double n = static_cast<double>(counts.size());
      double sum = 0.0;
      for (double c : counts) {
        sum += c;
      }
      s.mean = sum / n;
      s.geometric_mean = std::exp(log_sum / n);
      s.mean_total = total_sum / n;
      s.mean_relative_error = error_sum / n;
      std::vector<double> sorted = counts;
      std::sort(sorted.begin(), sorted.end());
      std::size_t mid = sorted.size() / 2;
      s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
      s.min = static_cast<std::int64_t>(sorted.front());
      s.max = static_cast<std::int64_t>(sorted.back());
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Runs every trial in order; failures are recorded per trial and method.
inline ComparisonResult run_comparison(const ExperimentSpec& spec) {
  if (!spec.trace_dir.empty()) {
    std::filesystem::create_directories(spec.trace_dir);
  }
  ComparisonResult out;
  for (int t = 0; t < spec.trials; ++t) {
    out.trials.push_back(run_trial(spec, t));
  }
  out.summary = summarize(spec, out.trials);
  return out;
}

inline Json comparison_to_json(const ExperimentSpec& spec, const ComparisonResult& r) {
  Json trials = Json::array();
  for (const TrialOutcome& t : r.trials) {
    Json methods = Json::array();
    for (const MethodOutcome& m : t.methods) {
      Json mj{{"method", m.method}, {"status", m.status}};
      if (m.ok) {
        mj["band_count"] = m.band_count;
        mj["total_count"] = m.total_count;
        mj["final_h"] = number_json(m.final_h);
        mj["relative_error"] = number_json(m.relative_error);
        mj["min_slack"] = number_json(m.min_slack);
        mj["final_min_slack"] = number_json(m.final_min_slack);
      } else {
        mj["error"] = m.error;
      }
      methods.push_back(std::move(mj));
    }
    Json tj{{"trial", t.trial}, {"seed", t.seed}};
    if (t.error.empty()) {
      tj["reference_h"] = number_json(t.reference_h);
      tj["methods"] = std::move(methods);
    } else {
      tj["error"] = t.error;
    }
    trials.push_back(std::move(tj));
  }
  Json summary = Json::array();
  for (const MethodSummary& s : r.summary) {
    summary.push_back(Json{{"method", s.method},
                           {"reached", s.reached},
                           {"failed", s.failed},
                           {"mean", number_json(s.mean)},
                           {"median", number_json(s.median)},
                           {"geometric_mean", number_json(s.geometric_mean)},
                           {"min", s.min},
                           {"max", s.max},
                           {"mean_total", number_json(s.mean_total)},
                           {"mean_relative_error", number_json(s.mean_relative_error)},
                           {"log10_counts", s.log10_counts}});
  }
  Json stepsizes = Json::object();
  for (const auto& [name, value] : spec.stepsizes) {
    stepsizes[name] = value;
  }
  return Json{{"experiment",
               {{"trials", spec.trials},
                {"links", spec.links},
                {"sources", spec.sources},
                {"bernoulli_p", spec.bernoulli_p},
                {"seed", spec.seed},
                {"band", spec.band},
                {"band_hold", spec.band_hold},
                {"feas_tol", spec.feas_tol},
                {"stepsizes", std::move(stepsizes)}}},
              {"summary", std::move(summary)},
              {"trials", std::move(trials)}};
}

/// Calibration networks for stepsize tuning use seeds disjoint from the trials.
inline std::uint64_t calibration_seed(const ExperimentSpec& spec, int n) {
  return spec.seed + 1'000'000 + static_cast<std::uint64_t>(n);
}

/// Grid-searches a constant stepsize per baseline on fresh calibration networks.
inline std::map<std::string, double> tune_stepsizes(const ExperimentSpec& spec,
                                                    int calibration_networks,
                                                    std::span<const double> grid) {
  std::vector<Network> nets;
  std::vector<double> refs;
  for (int n = 0; n < calibration_networks; ++n) {
    nets.push_back(random_network(spec.links, spec.sources, spec.bernoulli_p,
                                  calibration_seed(spec, n), spec.distribution));
    refs.push_back(solve_utility_reference(nets.back()).h);
  }
  FirstOrderConfig base;
  base.max_iters = spec.max_iters;
  base.band = spec.band;
  base.band_hold = spec.band_hold;
  base.feas_tol = spec.feas_tol;
  std::map<std::string, double> out;
  for (const std::string& method : spec.methods) {
    if (!is_baseline(method)) {
      continue;
    }
    StepsizeSearch found =
        search_stepsize(baseline_from_name(method), nets, refs, grid, base);
    if (found.admissible.empty()) {
      throw Error("no stepsize in the grid works for '" + method + "'");
    }
    out[method] = found.stepsize;
  }
  return out;
}

/// Half-decade grid from 1e-5 to 10.
inline std::vector<double> default_stepsize_grid() {
  std::vector<double> grid;
  for (int e = -10; e <= 2; ++e) {
    grid.push_back(std::pow(10.0, 0.5 * e));
  }
  return grid;
}

}  // namespace dnum
