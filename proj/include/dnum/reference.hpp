#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "dnum/newton_direction.hpp"

namespace dnum {

struct ReferenceSolution {
  Vector x;
  double f = 0.0;
  double h = 0.0;
  double decrement = 0.0;
  int iterations = 0;
};

/**
 * Centralized Newton method with dense duals and backtracking line search on
 * a barrier problem. Used as the high-accuracy oracle; any mu > 0 is allowed.
 */
inline ReferenceSolution solve_barrier_reference(const BarrierProblem& problem,
                                                 Vector x, double tolerance = 1e-12,
                                                 int max_iters = 500) {
  const Network& net = problem.network;
  ReferenceSolution out;
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int k = 0; k < max_iters; ++k) {
    Vector grad = eval_grad(problem, x);
    Vector hess = eval_hessian_diag(problem, x);
    Vector delta = exact_direction(net, hess, grad).delta;
    double decrement = inexact_decrement(delta, hess);
    out.decrement = decrement;
    out.iterations = k;
    if (decrement <= tolerance) {
      break;
    }
    // Rounding floor: stop once the decrement stops improving near zero.
    if (decrement < best * 0.5) {
      best = decrement;
      stalled = 0;
    } else if (decrement < 1e-9 && ++stalled >= 5) {
      break;
    }

    double step = 1.0;
    // Largest step keeping every component strictly inside the domain.
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (delta[j] < 0.0) {
        step = std::min(step, -0.99 * x[j] / delta[j]);
      }
    }
    double f0 = eval_f(problem, x);
    double slope = grad.dot(delta);
    while (true) {
      Vector trial = x + step * delta;
      if (trial.minCoeff() > 0.0 &&
          eval_f(problem, trial) <= f0 + 0.25 * step * slope) {
        x = std::move(trial);
        break;
      }
      step *= 0.5;
      if (step < 1e-20) {
        // No decrease representable at this precision.
        out.x = x;
        out.f = f0;
        out.h = eval_h(net, x);
        return out;
      }
    }
  }
  out.f = eval_f(problem, x);
  out.h = eval_h(net, x);
  out.x = std::move(x);
  return out;
}

/**
 * Optimum of the original (barrier-free) utility problem by following the
 * central path down to mu = final_mu. The duality gap at the end is at most
 * (S + L) * final_mu.
 */
inline ReferenceSolution solve_utility_reference(const Network& net,
                                                 double final_mu = 1e-10) {
  BarrierProblem problem{net, 1.0, 1.0};
  Vector x = feasible_init(net);
  ReferenceSolution sol;
  while (true) {
    sol = solve_barrier_reference(problem, x, 1e-10);
    x = sol.x;
    if (problem.mu <= final_mu) {
      break;
    }
    problem.mu = std::max(problem.mu * 0.1, final_mu);
  }
  sol.h = eval_h(net, sol.x);
  return sol;
}

}  // namespace dnum
