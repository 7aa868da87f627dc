#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "dnum/newton_direction.hpp"

namespace dnum {

struct ConsensusResult {
  Vector values;
  int rounds = 0;
};

/**
 * Synchronous max-consensus: every round each node takes the maximum over
 * itself and its neighbors. Runs until no value changes; the reported round
 * count is the number of rounds that changed something, at least 1.
 */
inline ConsensusResult max_consensus(const Vector& values,
                                     const std::vector<std::vector<int>>& adjacency) {
  int n = static_cast<int>(values.size());
  if (static_cast<int>(adjacency.size()) != n) {
    throw Error("consensus graph size does not match the values");
  }
  if (n == 0) {
    return {values, 1};
  }
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != n) {
    throw Error("consensus graph is disconnected");
  }

  ConsensusResult out{values, 0};
  while (true) {
    Vector next = out.values;
    bool changed = false;
    for (int u = 0; u < n; ++u) {
      for (int v : adjacency[u]) {
        if (out.values[v] > next[u]) {
          next[u] = out.values[v];
          changed = true;
        }
      }
    }
    if (!changed) {
      break;
    }
    out.values = std::move(next);
    ++out.rounds;
  }
  out.rounds = std::max(out.rounds, 1);
  return out;
}

/// Sources 0..S-1 and links S..S+L-1, joined along routes.
inline std::vector<std::vector<int>> communication_graph(const Network& net) {
  int s = net.num_sources();
  std::vector<std::vector<int>> adj(s + net.num_links());
  for (int i = 0; i < s; ++i) {
    for (int l : net.route(i)) {
      adj[i].push_back(s + l);
      adj[s + l].push_back(i);
    }
  }
  return adj;
}

/**
 * Which quantity divides the per-node error ratio in the first stopping
 * test. RoutePrice uses the weighted route price alone; Direction uses the
 * node's own component of the inexact direction, which is the quantity the
 * ratio is meant to bound.
 */
enum class RatioDenominator { RoutePrice, Direction };

struct ErrorControlConfig {
  /// Stage-1 budget; 0 selects ceil(log 0.1 / log F).
  int stage1_budget = 0;
  double p = 1e-3;
  double epsilon = 1e-4;
  /// Spectral bound; negative derives it from lambda1.
  double spectral_bound = -1.0;
  std::int64_t max_iters = 1'000'000;
  RatioDenominator denominator = RatioDenominator::Direction;
};

inline int default_stage1_budget(double spectral_bound) {
  if (spectral_bound <= 0.0) {
    return 1;
  }
  double steps = std::ceil(std::log(0.1) / std::log(spectral_bound));
  return std::max(1, static_cast<int>(steps));
}

/// 5% above lambda1, but never more than halfway to 1 and never above 0.999.
inline double spectral_bound_from(double lambda1) {
  return std::min({1.05 * lambda1, 0.5 * (1.0 + lambda1), 0.999});
}

struct StageOneResult {
  double beta = 0.0;
  double max_ratio = 0.0;
  double price_change = 0.0;
  std::int64_t consensus_rounds = 0;
};

namespace detail {

inline double guarded_ratio(double numer, double denom) {
  if (numer == 0.0) {
    return 0.0;
  }
  if (std::abs(denom) < 1e-14) {
    return std::numeric_limits<double>::infinity();
  }
  return std::abs(numer / denom);
}

inline double global_max(const Vector& values,
                         const std::vector<std::vector<int>>& graph,
                         std::int64_t& rounds) {
  ConsensusResult c = max_consensus(values, graph);
  rounds += c.rounds;
  // Every node now holds the maximum.
  return c.values[0];
}

}  // namespace detail

/**
 * First stopping test at iterate w(t) given the next iterate. Returns
 * beta = (max ratio / p)^-2, +inf when every ratio vanishes.
 */
inline StageOneResult stage1_beta(const Network& net, const Vector& hessian_diag,
                                  const Vector& grad, const DualState& current,
                                  const Vector& next_w, double spectral_bound,
                                  double p, RatioDenominator denominator,
                                  const std::vector<std::vector<int>>& graph) {
  int s = net.num_sources();
  int links = net.num_links();
  StageOneResult out;

  Vector change = Vector::Zero(s + links);
  change.tail(links) = (next_w - current.w).cwiseAbs();
  out.price_change = detail::global_max(change, graph, out.consensus_rounds);

  double lead = std::sqrt(static_cast<double>(links)) * out.price_change /
                (1.0 - spectral_bound);
  Vector source_term(s);
  for (int i = 0; i < s; ++i) {
    double route_term = current.weighted_price[i];
    if (denominator == RatioDenominator::Direction) {
      route_term += grad[i] / hessian_diag[i];
    }
    source_term[i] = route_term;
  }

  Vector ratio(s + links);
  for (int i = 0; i < s; ++i) {
    ratio[i] = detail::guarded_ratio(lead * current.initial_weighted_price[i],
                                     source_term[i]);
  }
  for (int l = 0; l < links; ++l) {
    double initial = 0.0;
    double denom = 0.0;
    for (int i : net.users(l)) {
      initial += current.initial_weighted_price[i];
      denom += source_term[i];
    }
    ratio[s + l] = detail::guarded_ratio(lead * initial, denom);
  }
  out.max_ratio = detail::global_max(ratio, graph, out.consensus_rounds);
  out.beta = out.max_ratio == 0.0
                 ? std::numeric_limits<double>::infinity()
                 : std::pow(out.max_ratio / p, -2.0);
  return out;
}

/// Per-node second-stage thresholds, sources first then links.
inline Vector stage2_thresholds(const Network& net, const Vector& hessian_diag,
                                double beta, double epsilon,
                                double spectral_bound) {
  if (!(beta < 1.0) || beta < 0.0) {
    throw Error("second stage needs beta in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw Error("epsilon must be positive");
  }
  int s = net.num_sources();
  int links = net.num_links();
  double scale = std::sqrt(epsilon / ((1.0 - beta) * (links + s) * links)) *
                 (1.0 - spectral_bound);
  Vector thresholds(s + links);
  Vector initial_weighted(s);
  for (int i = 0; i < s; ++i) {
    double hops = static_cast<double>(net.route(i).size());
    initial_weighted[i] = hops / hessian_diag[i];
    thresholds[i] = scale * std::sqrt(hessian_diag[i]) / hops;
  }
  for (int l = 0; l < links; ++l) {
    double total = 0.0;
    for (int i : net.users(l)) {
      total += initial_weighted[i];
    }
    thresholds[s + l] = scale / (std::sqrt(hessian_diag[s + l]) * total);
  }
  return thresholds;
}

/// Second-stage threshold on the price change.
inline double stage2_h(const Network& net, const Vector& hessian_diag,
                       double beta, double epsilon, double spectral_bound) {
  return stage2_thresholds(net, hessian_diag, beta, epsilon, spectral_bound)
      .minCoeff();
}

struct DualSolveResult {
  /// Certified dual iterate.
  Vector w;
  /// The iterate after it, a natural warm start.
  Vector w_next;
  ErrorCertificate certificate;
};

/**
 * Runs dual steps until the two-stage test certifies the current iterate:
 * stage 1 after a fixed budget, stage 2 by a price-change threshold.
 */
inline DualSolveResult run_dual_with_error_control(const Network& net,
                                                   const Vector& hessian_diag,
                                                   const Vector& grad,
                                                   const ErrorControlConfig& config,
                                                   const Vector& warm_start,
                                                   MessageMetrics* metrics = nullptr) {
  if (!(config.p > 0.0) || !(config.epsilon > 0.0)) {
    throw Error("p and epsilon must be positive");
  }
  double bound = config.spectral_bound;
  if (bound < 0.0) {
    bound = spectral_bound_from(spectral_diagnostics(net, hessian_diag, 0).lambda1);
  }
  if (!(bound >= 0.0 && bound < 1.0)) {
    throw Error("spectral bound must lie in [0, 1)");
  }
  int budget = config.stage1_budget > 0 ? config.stage1_budget
                                        : default_stage1_budget(bound);
  auto graph = communication_graph(net);

  LinkAggregates agg = gather_link_aggregates(net, hessian_diag, grad, metrics);
  DualState previous = make_dual_state(net, hessian_diag, warm_start);
  DualState current = previous;
  for (int step = 0; step < budget; ++step) {
    previous = std::move(current);
    current = dual_step_distributed(net, hessian_diag, agg, previous, metrics);
  }

  ErrorCertificate cert;
  cert.spectral_bound = bound;
  cert.stage1_budget = budget;
  StageOneResult first = stage1_beta(net, hessian_diag, grad, previous, current.w,
                                     bound, config.p, config.denominator, graph);
  cert.beta = first.beta;
  cert.consensus_rounds += first.consensus_rounds;

  if (first.beta < 1.0) {
    cert.stage = 2;
    Vector thresholds = stage2_thresholds(net, hessian_diag, first.beta,
                                          config.epsilon, bound);
    double h = -detail::global_max(-thresholds, graph, cert.consensus_rounds);
    cert.h_threshold = h;
    double change = first.price_change;
    while (change > h) {
      if (current.t >= config.max_iters) {
        throw Error("dual iteration cap reached before the stopping test passed");
      }
      previous = std::move(current);
      current = dual_step_distributed(net, hessian_diag, agg, previous, metrics);
      Vector diff = Vector::Zero(graph.size());
      diff.tail(net.num_links()) = (current.w - previous.w).cwiseAbs();
      change = detail::global_max(diff, graph, cert.consensus_rounds);
    }
  }

  cert.dual_iters = current.t;
  if (metrics) {
    metrics->consensus_rounds += cert.consensus_rounds;
  }
  return {std::move(previous.w), std::move(current.w), cert};
}

}  // namespace dnum
