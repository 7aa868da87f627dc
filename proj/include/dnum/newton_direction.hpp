#pragma once

#include <cmath>
#include <optional>

#include "dnum/dual_splitting.hpp"

namespace dnum {

/// Record of how a dual iterate was accepted.
struct ErrorCertificate {
  int stage = 1;
  /// +inf when the price change vanished.
  double beta = 0.0;
  /// Stage-2 threshold on the price change; NaN for stage 1.
  double h_threshold = std::numeric_limits<double>::quiet_NaN();
  std::int64_t dual_iters = 0;
  double spectral_bound = 0.0;
  int stage1_budget = 0;
  /// Max-consensus rounds spent aggregating the stopping tests.
  std::int64_t consensus_rounds = 0;
};

struct NewtonDirection {
  /// Rate part then slack part.
  Vector delta;
  double decrement = 0.0;
  /// Value fed to the stepsize rule.
  double theta = 0.0;
  std::int64_t dual_iters_used = 0;
  std::optional<ErrorCertificate> certificate;
};

inline double inexact_decrement(const Vector& delta, const Vector& hessian_diag) {
  return std::sqrt((delta.array().square() * hessian_diag.array()).sum());
}

/**
 * Feasibility-preserving direction from a (possibly inexact) dual vector.
 * Sources step against their price-adjusted gradient and slacks absorb the
 * resulting load change, so [R I] delta = 0 for any w.
 */
inline NewtonDirection primal_direction(const Network& net,
                                        const Vector& hessian_diag,
                                        const Vector& grad, const Vector& w) {
  detail::require_hessian(net, hessian_diag);
  int s = net.num_sources();
  int links = net.num_links();
  Vector route_price = net.route_sums(w);
  Vector delta(s + links);
  for (int i = 0; i < s; ++i) {
    delta[i] = -(grad[i] + route_price[i]) / hessian_diag[i];
  }
  delta.tail(links) = -net.link_loads(delta.head(s));
  NewtonDirection dir;
  dir.decrement = inexact_decrement(delta, hessian_diag);
  dir.theta = dir.decrement;
  dir.delta = std::move(delta);
  return dir;
}

struct ExactDirection {
  Vector delta;
  Vector w;
};

/// Exact Newton direction by eliminating the primal block of the KKT system.
inline ExactDirection exact_direction(const Network& net,
                                      const Vector& hessian_diag,
                                      const Vector& grad) {
  Vector w = solve_dual_exact(net, hessian_diag, grad);
  Matrix a = net.constraint_matrix();
  Vector delta = -(grad + a.transpose() * w).cwiseQuotient(hessian_diag);
  return {std::move(delta), std::move(w)};
}

inline double exact_decrement(const Network& net, const Vector& hessian_diag,
                              const Vector& grad) {
  return inexact_decrement(exact_direction(net, hessian_diag, grad).delta,
                           hessian_diag);
}

}  // namespace dnum
