#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dnum/aux_summation.hpp"
#include "dnum/error_control.hpp"
#include "dnum/reference.hpp"
#include "dnum/rng.hpp"

namespace dnum {

enum class Phase { Damped, Quadratic };

inline const char* phase_name(Phase phase) {
  return phase == Phase::Damped ? "damped" : "quadratic";
}

/// How each primal iteration obtains its direction.
enum class DirectionMode {
  /// Splitting iteration with the two-stage stopping test and summation.
  Distributed,
  /// Dense dual solve; the decrement is exact.
  Exact,
};

struct SolverConfig {
  double mu = 1.0;
  double p = 1e-3;
  double epsilon = 1e-4;
  double V = 0.12;
  /// NaN selects the midpoint of the admissible interval for V.
  double b = std::numeric_limits<double>::quiet_NaN();
  /// Stage-1 dual budget; 0 derives it from the spectral bound.
  int stage1_budget = 0;
  double theta_term = 1e-8;
  int max_primal_iters = 200;
  /// Relative error target of the two-pass scheme.
  double a = 0.01;
  std::uint64_t seed = 0;
  DirectionMode mode = DirectionMode::Distributed;
  RatioDenominator denominator = RatioDenominator::Direction;
  /// Relative noise injected into theta, for perturbation experiments.
  double theta_noise = 0.0;
  /// Also compute the exact decrement at every iterate (dense, for diagnostics).
  bool record_exact_decrement = false;
  /// Keep every iterate in the trace.
  bool record_iterates = false;

  double stepsize_constant() const {
    if (!std::isnan(b)) {
      return b;
    }
    double low = (V + 1.0) / (2.0 * V + 1.0);
    return 0.5 * (low + 1.0);
  }
};

/// Throws Error when a parameter lies outside its admissible window.
inline void validate(const SolverConfig& config) {
  if (!(config.mu >= 1.0)) {
    throw Error("mu must be at least 1");
  }
  if (!(config.V > 0.0 && config.V < 0.267)) {
    throw Error("V must lie in (0, 0.267)");
  }
  double b = config.stepsize_constant();
  double low = (config.V + 1.0) / (2.0 * config.V + 1.0);
  if (!(b > low && b < 1.0)) {
    std::ostringstream msg;
    msg << "b must lie in (" << low << ", 1) for V = " << config.V;
    throw Error(msg.str());
  }
  if (config.mode == DirectionMode::Distributed &&
      !(config.p > 0.0 && config.epsilon > 0.0)) {
    throw Error("p and epsilon must be positive");
  }
  if (config.p < 0.0 || config.epsilon < 0.0) {
    throw Error("p and epsilon must be nonnegative");
  }
  if (!(config.theta_term >= 0.0)) {
    throw Error("theta termination threshold must be nonnegative");
  }
  if (config.max_primal_iters <= 0) {
    throw Error("max_primal_iters must be positive");
  }
  if (!(config.a > 0.0)) {
    throw Error("relative error target must be positive");
  }
  if (config.stage1_budget < 0) {
    throw Error("stage-1 budget must be nonnegative");
  }
  if (config.theta_noise < 0.0 || config.theta_noise >= 1.0) {
    throw Error("theta noise must lie in [0, 1)");
  }
}

struct StepsizeResult {
  double d = 1.0;
  Phase phase = Phase::Damped;
};

/// Damped steps b/(theta+1) until theta first drops below V, unit steps after.
inline StepsizeResult stepsize_rule(double theta, Phase phase, double V, double b) {
  if (phase == Phase::Damped && theta >= V) {
    return {b / (theta + 1.0), Phase::Damped};
  }
  return {1.0, Phase::Quadratic};
}

struct IterationRecord {
  int k = 0;
  double f = 0.0;
  double h = 0.0;
  double lambda_tilde = 0.0;
  double theta = 0.0;
  /// Zero on the terminal record.
  double stepsize = 0.0;
  Phase phase = Phase::Damped;
  std::int64_t dual_iters = 0;
  std::int64_t consensus_rounds = 0;
  int summation_rounds = 0;
  double min_slack = 0.0;
  double feas_residual = 0.0;
  std::optional<ErrorCertificate> certificate;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double exact_decrement = std::numeric_limits<double>::quiet_NaN();
  Vector x;
};

struct SolveResult {
  Vector x;
  std::vector<IterationRecord> trace;
  bool converged = false;
  MessageMetrics metrics;
  /// Dual-graph report at the starting point.
  std::optional<SpectralReport> dual_graph;
  double scale = 1.0;
  double mu = 1.0;

  int primal_steps() const {
    int steps = 0;
    for (const auto& r : trace) {
      steps += r.stepsize > 0.0 ? 1 : 0;
    }
    return steps;
  }

  std::int64_t dual_iterations() const {
    std::int64_t total = 0;
    for (const auto& r : trace) {
      total += r.dual_iters;
    }
    return total;
  }

  /// Primal steps plus all dual iterations.
  std::int64_t counted_iterations() const {
    return primal_steps() + dual_iterations();
  }
};

/**
 * Distributed inexact Newton method from a strictly feasible start. Every
 * iterate stays strictly positive and satisfies the link constraints.
 */
inline SolveResult newton_solve(const BarrierProblem& problem,
                                const SolverConfig& config,
                                std::optional<Vector> start = std::nullopt) {
  validate(config);
  if (!(problem.mu >= 1.0)) {
    throw Error("the Newton solver needs mu >= 1");
  }
  if (!(problem.scale > 0.0)) {
    throw Error("objective scale must be positive");
  }
  const Network& net = problem.network;
  int s = net.num_sources();
  int links = net.num_links();
  double b = config.stepsize_constant();

  Vector x = start ? *start : feasible_init(net);
  detail::require_positive(x, s + links);
  if (feasibility_residual(net, x) > 1e-9) {
    throw Error("starting point violates the link constraints");
  }

  SolveResult result;
  result.scale = problem.scale;
  result.mu = problem.mu;
  AuxiliaryGraph aux = build_auxiliary_graph(net);
  Vector warm = Vector::Ones(links);
  Phase phase = Phase::Damped;
  std::mt19937_64 noise(config.seed);

  result.dual_graph =
      spectral_diagnostics(net, eval_hessian_diag(problem, x));

  for (int k = 0;; ++k) {
    Vector grad = eval_grad(problem, x);
    Vector hess = eval_hessian_diag(problem, x);
    IterationRecord rec;
    rec.k = k;
    rec.f = eval_f(problem, x);
    rec.h = eval_h(net, x);
    rec.min_slack = min_slack(net, x);
    rec.feas_residual = feasibility_residual(net, x);

    NewtonDirection dir;
    if (config.mode == DirectionMode::Distributed) {
      MessageMetrics step_metrics;
      double lambda1 = spectral_diagnostics(net, hess, 0).lambda1;
      ErrorControlConfig ec;
      ec.stage1_budget = config.stage1_budget;
      ec.p = config.p;
      ec.epsilon = config.epsilon;
      ec.spectral_bound = spectral_bound_from(lambda1);
      ec.denominator = config.denominator;
      DualSolveResult dual =
          run_dual_with_error_control(net, hess, grad, ec, warm, &step_metrics);
      dir = primal_direction(net, hess, grad, dual.w);
      dir.theta = compute_theta(net, aux, dir.delta, hess, &step_metrics);
      dir.dual_iters_used = dual.certificate.dual_iters;
      dir.certificate = dual.certificate;
      warm = dual.w_next;
      rec.lambda1 = lambda1;
      rec.dual_iters = step_metrics.dual_rounds;
      rec.consensus_rounds = step_metrics.consensus_rounds;
      rec.summation_rounds = static_cast<int>(step_metrics.summation_rounds);
      result.metrics += step_metrics;
    } else {
      ExactDirection exact = exact_direction(net, hess, grad);
      dir.delta = std::move(exact.delta);
      dir.decrement = inexact_decrement(dir.delta, hess);
      dir.theta = dir.decrement;
    }
    if (config.theta_noise > 0.0) {
      double u = 2.0 * detail::unit_uniform(noise) - 1.0;
      dir.theta *= 1.0 + config.theta_noise * u;
    }

    rec.lambda_tilde = dir.decrement;
    rec.theta = dir.theta;
    rec.certificate = dir.certificate;
    if (config.record_exact_decrement) {
      rec.exact_decrement = exact_decrement(net, hess, grad);
    }
    if (config.record_iterates) {
      rec.x = x;
    }

    StepsizeResult step = stepsize_rule(dir.theta, phase, config.V, b);
    phase = step.phase;
    rec.phase = phase;
    bool done = phase == Phase::Quadratic && dir.theta <= config.theta_term;
    bool capped = k >= config.max_primal_iters;
    if (done || capped) {
      rec.stepsize = 0.0;
      result.trace.push_back(std::move(rec));
      result.converged = done;
      break;
    }
    rec.stepsize = step.d;
    result.trace.push_back(std::move(rec));

    Vector next = x + step.d * dir.delta;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      if (!(next[j] > 0.0)) {
        std::ostringstream msg;
        msg << "iterate " << k + 1 << " left the positive orthant at component "
            << j << " (stepsize " << step.d << ", theta " << dir.theta << ")";
        throw Error(msg.str());
      }
    }
    double residual = feasibility_residual(net, next);
    if (residual > 1e-9) {
      std::ostringstream msg;
      msg << "iterate " << k + 1 << " drifted off the link constraints ("
          << residual << ")";
      throw Error(msg.str());
    }
    x = std::move(next);
  }
  result.x = std::move(x);
  return result;
}

struct TwoPassResult {
  SolveResult first;
  SolveResult second;
  /// Objective scale of the second pass.
  double scale = 1.0;
  /// Constant added to the negative utility before scaling.
  double shift = 0.0;
  Vector x;
};

/**
 * How the second-pass scale is chosen. SingleMu assumes the barrier
 * solution is within mu of the optimum; BarrierCount uses the bound with one
 * mu per log term, (S + L) * mu.
 */
enum class ScaleRule { SingleMu, BarrierCount };

/**
 * Solves once with config.mu to estimate the optimal utility, then again with
 * the objective scaled so that the barrier error is a fraction a of it.
 */
inline TwoPassResult two_pass_solve(const Network& net, const SolverConfig& config,
                                    ScaleRule rule = ScaleRule::BarrierCount) {
  validate(config);
  TwoPassResult out;
  out.first = newton_solve(BarrierProblem{net, config.mu, 1.0}, config);
  double h_first = eval_h(net, out.first.x);
  double mu = config.mu;
  double gap = h_first - mu;
  if (gap <= 0.0) {
    out.shift = mu - h_first + std::max(std::abs(h_first), mu);
    gap = h_first + out.shift - mu;
  }
  if (!(gap > 0.0)) {
    throw Error("cannot derive a positive objective scale");
  }
  double terms = rule == ScaleRule::BarrierCount
                     ? static_cast<double>(net.num_sources() + net.num_links())
                     : 1.0;
  out.scale = terms / (config.a * gap);
  SolverConfig second = config;
  second.mu = 1.0;
  out.second = newton_solve(BarrierProblem{net, 1.0, out.scale}, second,
                            out.first.x);
  out.x = out.second.x;
  return out;
}

}  // namespace dnum
