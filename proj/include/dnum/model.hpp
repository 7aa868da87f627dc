#pragma once

#include <cmath>
#include <string>

#include "dnum/network.hpp"

namespace dnum {

/**
 * Barrier-reformulated problem over x = (rates, slacks):
 *
 *   minimize  -scale * sum U_i(s_i) - mu * sum log x_j
 *   subject to [R I] x = c
 */
struct BarrierProblem {
  Network network;
  double mu = 1.0;
  double scale = 1.0;

  int dimension() const {
    return network.num_sources() + network.num_links();
  }
};

namespace detail {

inline void require_positive(const Vector& x, int expected_size) {
  if (x.size() != expected_size) {
    throw Error("primal vector has length " + std::to_string(x.size()) +
                ", expected " + std::to_string(expected_size));
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0.0)) {
      throw Error("primal component " + std::to_string(j) +
                  " is not strictly positive");
    }
  }
}

}  // namespace detail

/// Strictly feasible starting point: every source gets min_capacity / (S + 1).
inline Vector feasible_init(const Network& net) {
  int s = net.num_sources();
  int l = net.num_links();
  double rate = net.min_capacity() / (s + 1);
  Vector x(s + l);
  x.head(s).setConstant(rate);
  x.tail(l) = net.capacities() - net.link_loads(x.head(s));
  detail::require_positive(x, s + l);
  return x;
}

inline double eval_f(const BarrierProblem& problem, const Vector& x) {
  const Network& net = problem.network;
  detail::require_positive(x, problem.dimension());
  double utility = 0.0;
  for (int i = 0; i < net.num_sources(); ++i) {
    utility += net.utility(i).value(x[i]);
  }
  return -problem.scale * utility - problem.mu * x.array().log().sum();
}

inline Vector eval_grad(const BarrierProblem& problem, const Vector& x) {
  const Network& net = problem.network;
  detail::require_positive(x, problem.dimension());
  Vector g = -problem.mu * x.cwiseInverse();
  for (int i = 0; i < net.num_sources(); ++i) {
    g[i] -= problem.scale * net.utility(i).first(x[i]);
  }
  return g;
}

inline Vector eval_hessian_diag(const BarrierProblem& problem,
                                const Vector& x) {
  const Network& net = problem.network;
  detail::require_positive(x, problem.dimension());
  Vector h = problem.mu * x.array().square().inverse();
  for (int i = 0; i < net.num_sources(); ++i) {
    h[i] -= problem.scale * net.utility(i).second(x[i]);
  }
  return h;
}

/// Negative total utility of the rate part of x.
inline double eval_h(const Network& net, const Vector& x) {
  double total = 0.0;
  for (int i = 0; i < net.num_sources(); ++i) {
    total -= net.utility(i).value(x[i]);
  }
  return total;
}

/// ||[R I] x - c||_inf / ||c||_inf.
inline double feasibility_residual(const Network& net, const Vector& x) {
  int s = net.num_sources();
  Vector residual = net.link_loads(x.head(s)) + x.tail(net.num_links()) -
                    net.capacities();
  return residual.lpNorm<Eigen::Infinity>() /
         net.capacities().lpNorm<Eigen::Infinity>();
}

inline double min_slack(const Network& net, const Vector& x) {
  return x.tail(net.num_links()).minCoeff();
}

}  // namespace dnum
