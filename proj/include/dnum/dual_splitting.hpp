#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dnum/metrics.hpp"
#include "dnum/model.hpp"

namespace dnum {

/**
 * Splitting of the dual system (A H^-1 A') w = -A H^-1 grad into its diagonal
 * D, the zero-diagonal off-diagonal part B, and B's row sums.
 */
struct SplittingData {
  Vector diag;
  Matrix off_diag;
  Vector row_sums;
  Vector rhs;

  int size() const { return static_cast<int>(diag.size()); }

  /// D + Bbar, the (diagonal) matrix inverted by the iteration.
  Vector pivot() const { return diag + row_sums; }

  /// (D + Bbar)^-1 (Bbar - B).
  Matrix iteration_matrix() const {
    Matrix m = -off_diag;
    m.diagonal() += row_sums;
    return pivot().cwiseInverse().asDiagonal() * m;
  }

  /// D + 2 Bbar - B.
  Matrix comparison_matrix() const {
    Matrix q = -off_diag;
    q.diagonal() += diag + 2.0 * row_sums;
    return q;
  }
};

namespace detail {

inline void require_hessian(const Network& net, const Vector& hessian_diag) {
  if (hessian_diag.size() != net.num_sources() + net.num_links()) {
    throw Error("Hessian diagonal has the wrong length");
  }
  if (!(hessian_diag.minCoeff() > 0.0)) {
    throw Error("Hessian diagonal must be strictly positive");
  }
}

/// A H^-1 A' formed explicitly.
inline Matrix dual_system_matrix(const Network& net, const Vector& hessian_diag) {
  int s = net.num_sources();
  int links = net.num_links();
  Matrix g = Matrix::Zero(links, links);
  for (int i = 0; i < s; ++i) {
    double inv = 1.0 / hessian_diag[i];
    auto route = net.route(i);
    for (int a : route) {
      for (int b : route) {
        g(a, b) += inv;
      }
    }
  }
  for (int l = 0; l < links; ++l) {
    g(l, l) += 1.0 / hessian_diag[s + l];
  }
  return g;
}

/// -A H^-1 grad.
inline Vector dual_rhs(const Network& net, const Vector& hessian_diag,
                       const Vector& grad) {
  int s = net.num_sources();
  Vector scaled = grad.cwiseQuotient(hessian_diag);
  return -(net.link_loads(scaled.head(s)) + scaled.tail(net.num_links()));
}

}  // namespace detail

inline SplittingData build_splitting(const Network& net,
                                     const Vector& hessian_diag,
                                     const Vector& grad) {
  detail::require_hessian(net, hessian_diag);
  if (grad.size() != hessian_diag.size()) {
    throw Error("gradient has the wrong length");
  }
  Matrix g = detail::dual_system_matrix(net, hessian_diag);
  SplittingData split;
  split.diag = g.diagonal();
  split.off_diag = g;
  split.off_diag.diagonal().setZero();
  split.row_sums = split.off_diag.rowwise().sum();
  split.rhs = detail::dual_rhs(net, hessian_diag, grad);
  return split;
}

/// One matrix-form dual step.
inline Vector dual_step_matrix(const SplittingData& split, const Vector& w) {
  Vector mixed = split.row_sums.cwiseProduct(w) - split.off_diag * w;
  return (mixed + split.rhs).cwiseQuotient(split.pivot());
}

/**
 * Per-primal-iteration quantities the links gather once from the sources
 * crossing them, before dual stepping starts.
 */
struct LinkAggregates {
  /// Sum over users of Pi_i(0), the weighted route price at unit link prices.
  Vector initial_weighted_price;
  /// Sum over users of H_ii^-1.
  Vector inverse_curvature;
  /// Sum over users of H_ii^-1 grad_i.
  Vector scaled_gradient;
  /// H^-1 and H^-1 grad of the link's own slack.
  Vector slack_inverse_curvature;
  Vector slack_scaled_gradient;
};

/**
 * Dual prices with the route information the sources derive from them.
 */
struct DualState {
  Vector w;
  std::int64_t t = 0;
  /// Route price: sum of w over the route.
  Vector route_price;
  /// Route price scaled by H_ii^-1.
  Vector weighted_price;
  /// Weighted route price at unit link prices; empty until initialized.
  Vector initial_weighted_price;
};

/// Sources compute Pi_i(0) and push it with their local curvature terms.
inline LinkAggregates gather_link_aggregates(const Network& net,
                                             const Vector& hessian_diag,
                                             const Vector& grad,
                                             MessageMetrics* metrics = nullptr) {
  detail::require_hessian(net, hessian_diag);
  int s = net.num_sources();
  int links = net.num_links();
  LinkAggregates agg;
  agg.initial_weighted_price = Vector::Zero(links);
  agg.inverse_curvature = Vector::Zero(links);
  agg.scaled_gradient = Vector::Zero(links);
  agg.slack_inverse_curvature = hessian_diag.tail(links).cwiseInverse();
  agg.slack_scaled_gradient =
      grad.tail(links).cwiseQuotient(hessian_diag.tail(links));
  for (int i = 0; i < s; ++i) {
    double inv = 1.0 / hessian_diag[i];
    auto route = net.route(i);
    double pi0 = inv * static_cast<double>(route.size());
    for (int l : route) {
      agg.initial_weighted_price[l] += pi0;
      agg.inverse_curvature[l] += inv;
      agg.scaled_gradient[l] += inv * grad[i];
    }
    if (metrics) {
      metrics->source_pushes += static_cast<std::int64_t>(route.size());
    }
  }
  return agg;
}

/// Links broadcast w and sources read back their route prices.
inline DualState make_dual_state(const Network& net,
                                 const Vector& hessian_diag, Vector w,
                                 std::int64_t t = 0) {
  detail::require_hessian(net, hessian_diag);
  if (w.size() != net.num_links()) {
    throw Error("dual vector has the wrong length");
  }
  int s = net.num_sources();
  DualState state;
  state.route_price = net.route_sums(w);
  state.weighted_price =
      state.route_price.cwiseQuotient(hessian_diag.head(s));
  state.initial_weighted_price = Vector(s);
  for (int i = 0; i < s; ++i) {
    state.initial_weighted_price[i] =
        static_cast<double>(net.route(i).size()) / hessian_diag[i];
  }
  state.w = std::move(w);
  state.t = t;
  return state;
}

/**
 * One distributed dual step. Each link combines its own price and slack
 * terms with the aggregate of Pi_i(t) over its users; the result matches
 * dual_step_matrix.
 */
inline DualState dual_step_distributed(const Network& net,
                                       const Vector& hessian_diag,
                                       const LinkAggregates& agg,
                                       const DualState& state,
                                       MessageMetrics* metrics = nullptr) {
  if (state.initial_weighted_price.size() != net.num_sources()) {
    throw Error("dual state has no initial weighted route prices");
  }
  int links = net.num_links();
  Vector next(links);
  for (int l = 0; l < links; ++l) {
    double user_price = 0.0;
    for (int i : net.users(l)) {
      user_price += state.weighted_price[i];
    }
    double w_l = state.w[l];
    double numer = (agg.initial_weighted_price[l] - agg.inverse_curvature[l]) * w_l -
                   user_price + agg.inverse_curvature[l] * w_l -
                   agg.scaled_gradient[l] - agg.slack_scaled_gradient[l];
    double denom = agg.slack_inverse_curvature[l] + agg.initial_weighted_price[l];
    next[l] = numer / denom;
  }
  if (metrics) {
    metrics->dual_rounds += 1;
    metrics->route_feedbacks += net.num_sources();
    for (int i = 0; i < net.num_sources(); ++i) {
      metrics->source_pushes += static_cast<std::int64_t>(net.route(i).size());
    }
  }
  DualState out = make_dual_state(net, hessian_diag, std::move(next), state.t + 1);
  return out;
}

/// Convenience overload that gathers the link aggregates itself.
inline DualState dual_step_distributed(const Network& net,
                                       const Vector& hessian_diag,
                                       const Vector& grad,
                                       const DualState& state) {
  return dual_step_distributed(
      net, hessian_diag, gather_link_aggregates(net, hessian_diag, grad), state);
}

/// Dense solve of (A H^-1 A') w = -A H^-1 grad.
inline Vector solve_dual_exact(const Network& net, const Vector& hessian_diag,
                               const Vector& grad) {
  detail::require_hessian(net, hessian_diag);
  Matrix g = detail::dual_system_matrix(net, hessian_diag);
  Vector rhs = detail::dual_rhs(net, hessian_diag, grad);
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw Error("dual system is not positive definite");
  }
  Vector w = llt.solve(rhs);
  double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  double residual = (g * w - rhs).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-10 * scale * std::max(1.0, g.lpNorm<Eigen::Infinity>()))) {
    throw Error("dual solve residual too large");
  }
  return w;
}

struct SpectralReport {
  double lambda1 = 0.0;
  double upper_bound = 0.0;
  double max_out_degree = 0.0;
  /// Present only when the link count is within the enumeration limit.
  std::optional<double> max_cut;
  std::optional<double> lower_bound;
  /// 4 * (max over cuts of B weight) / trace(D + Bbar).
  std::optional<double> rayleigh_lower_bound;
};

namespace detail {

/**
 * Exact maximum of sum_{i in S, j not in S} weight(i, j) over subsets S, for a
 * symmetric weight matrix. Gray-code walk with incremental gains.
 */
inline double exhaustive_max_cut(const Matrix& weight) {
  int n = static_cast<int>(weight.rows());
  if (n < 2) {
    return 0.0;
  }
  // The last node stays on side 0; complements give the same cut.
  int free_nodes = n - 1;
  std::vector<int> side(n, 0);
  // gain[k]: change in cut value if node k switches side.
  Vector gain = weight.rowwise().sum();
  gain -= weight.diagonal();
  double cut = 0.0;
  double best = 0.0;
  std::uint64_t total = std::uint64_t{1} << free_nodes;
  for (std::uint64_t step = 1; step < total; ++step) {
    int k = std::countr_zero(step);
    cut += gain[k];
    side[k] ^= 1;
    gain[k] = -gain[k];
    for (int j = 0; j < n; ++j) {
      if (j == k) {
        continue;
      }
      double w = weight(k, j);
      gain[j] += side[j] == side[k] ? 2.0 * w : -2.0 * w;
    }
    best = std::max(best, cut);
  }
  return best;
}

}  // namespace detail

/**
 * Spectrum of the dual iteration matrix and its graph bounds.
 *
 * The iteration matrix is similar to the symmetric positive semidefinite
 * matrix P^-1/2 (Bbar - B) P^-1/2 with P = D + Bbar, so its eigenvalues are
 * real and nonnegative.
 */
inline SpectralReport spectral_diagnostics(const Network& net,
                                           const Vector& hessian_diag,
                                           int enumeration_limit = 20) {
  Vector grad = Vector::Zero(hessian_diag.size());
  SplittingData split = build_splitting(net, hessian_diag, grad);
  int links = split.size();
  Vector pivot = split.pivot();
  Vector root_inv = pivot.cwiseSqrt().cwiseInverse();

  Matrix laplacian = -split.off_diag;
  laplacian.diagonal() += split.row_sums;
  Matrix sym = root_inv.asDiagonal() * laplacian * root_inv.asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);

  SpectralReport report;
  report.lambda1 = eig.eigenvalues().cwiseAbs().maxCoeff();
  report.max_out_degree = split.row_sums.cwiseQuotient(pivot).maxCoeff();
  report.upper_bound = std::min(2.0 * report.max_out_degree, 1.0);

  if (links <= enumeration_limit) {
    // Edge weights of the dual graph, counted in both directions.
    Matrix directed = pivot.cwiseInverse().asDiagonal() * split.off_diag;
    Matrix both = directed + directed.transpose();
    double mc = detail::exhaustive_max_cut(both);
    report.max_cut = mc;
    report.lower_bound = 4.0 * mc / links;
    double mc_raw = detail::exhaustive_max_cut(split.off_diag);
    report.rayleigh_lower_bound = 4.0 * mc_raw / pivot.sum();
  }
  return report;
}

}  // namespace dnum
