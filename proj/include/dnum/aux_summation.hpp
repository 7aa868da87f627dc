#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dnum/metrics.hpp"
#include "dnum/network.hpp"

namespace dnum {

struct AuxEdge {
  int a = 0;
  int b = 0;
  int link = 0;

  bool operator==(const AuxEdge&) const = default;
};

/**
 * Source-node graph recording which sources share links, built once per
 * network by a signaling procedure. Drives the exact finite-round summation.
 */
struct AuxiliaryGraph {
  int num_sources = 0;
  std::vector<AuxEdge> edges;
  /// Per link, member sources in insertion order.
  std::vector<std::vector<int>> theta;
  /// Links whose member set has more than one source, ascending.
  std::vector<int> shared_links;
  /// Per source, the shared links it is a member of, ascending.
  std::vector<std::vector<int>> shared_links_of;
  int construction_rounds = 0;

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(num_sources);
    for (const AuxEdge& e : edges) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    for (auto& row : adj) {
      std::sort(row.begin(), row.end());
    }
    return adj;
  }
};

/**
 * Simulates the construction rounds. Source 0 starts grey and labels its
 * route. In each of the S - 1 rounds, white sources that see a nonempty set
 * on their route (as of the start of the round) turn grey and send neighbor
 * and label signals along their route in stored order.
 *
 * A link that was empty at the start of the round takes the smallest
 * labeling source and forwards everything. A link that was nonempty links
 * each arriving neighbor to its current members in ascending source order,
 * admits it, and stops that neighbor signal.
 */
inline AuxiliaryGraph build_auxiliary_graph(const Network& net) {
  int s = net.num_sources();
  int links = net.num_links();
  AuxiliaryGraph aux;
  aux.num_sources = s;
  aux.theta.assign(links, {});

  std::vector<char> grey(s, 0);
  grey[0] = 1;
  for (int l : net.route(0)) {
    aux.theta[l].push_back(0);
  }

  for (int round = 0; round < s - 1; ++round) {
    std::vector<std::size_t> size_at_start(links);
    for (int l = 0; l < links; ++l) {
      size_at_start[l] = aux.theta[l].size();
    }
    std::vector<int> senders;
    for (int i = 0; i < s; ++i) {
      if (grey[i]) {
        continue;
      }
      std::size_t seen = 0;
      for (int l : net.route(i)) {
        seen += size_at_start[l];
      }
      if (seen > 0) {
        senders.push_back(i);
      }
    }

    std::vector<int> label_winner(links, -1);
    for (int i : senders) {
      grey[i] = 1;
      bool neighbor_alive = true;
      for (int l : net.route(i)) {
        if (size_at_start[l] == 0) {
          if (label_winner[l] < 0 || i < label_winner[l]) {
            label_winner[l] = i;
          }
        } else if (neighbor_alive) {
          for (int j : aux.theta[l]) {
            aux.edges.push_back({std::min(i, j), std::max(i, j), l});
          }
          aux.theta[l].push_back(i);
          neighbor_alive = false;
        }
      }
    }
    for (int l = 0; l < links; ++l) {
      if (label_winner[l] >= 0) {
        aux.theta[l].push_back(label_winner[l]);
      }
    }
    ++aux.construction_rounds;
  }

  for (int i = 0; i < s; ++i) {
    if (!grey[i]) {
      throw Error("source " + std::to_string(i) +
                  " is not reachable through shared links");
    }
  }

  aux.shared_links_of.assign(s, {});
  for (int l = 0; l < links; ++l) {
    if (aux.theta[l].size() > 1) {
      aux.shared_links.push_back(l);
      for (int i : aux.theta[l]) {
        aux.shared_links_of[i].push_back(l);
      }
    }
  }
  return aux;
}

/**
 * Structural checks on a built auxiliary graph. Returns one message per
 * violated property; empty when all hold.
 */
inline std::vector<std::string> verify_auxiliary_graph(const Network& net,
                                                       const AuxiliaryGraph& aux) {
  std::vector<std::string> problems;
  int s = net.num_sources();
  int links = net.num_links();

  for (int l = 0; l < links; ++l) {
    auto users = net.users(l);
    for (int i : aux.theta[l]) {
      if (!std::binary_search(users.begin(), users.end(), i)) {
        problems.push_back("member set of link " + std::to_string(l) +
                           " holds a source that does not use it");
      }
    }
    if (aux.theta[l].empty()) {
      problems.push_back("member set of link " + std::to_string(l) +
                         " is empty");
    }
  }

  std::vector<std::vector<int>> edge_count(s, std::vector<int>(s, 0));
  for (const AuxEdge& e : aux.edges) {
    if (e.a == e.b) {
      problems.push_back("self loop");
      continue;
    }
    ++edge_count[e.a][e.b];
    ++edge_count[e.b][e.a];
    const auto& members = aux.theta[e.link];
    bool a_in = std::find(members.begin(), members.end(), e.a) != members.end();
    bool b_in = std::find(members.begin(), members.end(), e.b) != members.end();
    if (!a_in || !b_in) {
      problems.push_back("edge label does not hold both endpoints");
    }
  }
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) {
      if (edge_count[i][j] > 1) {
        problems.push_back("multiple edges between sources " +
                           std::to_string(i) + " and " + std::to_string(j));
      }
      bool share = false;
      for (int l = 0; l < links && !share; ++l) {
        const auto& m = aux.theta[l];
        share = std::find(m.begin(), m.end(), i) != m.end() &&
                std::find(m.begin(), m.end(), j) != m.end();
      }
      if (share != (edge_count[i][j] > 0)) {
        problems.push_back("adjacency of sources " + std::to_string(i) + " and " +
                           std::to_string(j) + " disagrees with member sets");
      }
    }
  }

  // Replace every shared link's clique by a hub node. Mixed-label cycles
  // exist iff the hub graph has a cycle; connectivity carries over.
  int hubs = static_cast<int>(aux.shared_links.size());
  int nodes = s + hubs;
  std::vector<int> parent(nodes);
  for (int k = 0; k < nodes; ++k) {
    parent[k] = k;
  }
  auto find = [&](int k) {
    while (parent[k] != k) {
      parent[k] = parent[parent[k]];
      k = parent[k];
    }
    return k;
  };
  bool cyclic = false;
  int merges = 0;
  for (int h = 0; h < hubs; ++h) {
    for (int i : aux.theta[aux.shared_links[h]]) {
      int a = find(s + h);
      int b = find(i);
      if (a == b) {
        cyclic = true;
      } else {
        parent[a] = b;
        ++merges;
      }
    }
  }
  if (cyclic) {
    problems.push_back("cycle through edges of different labels");
  }
  if (merges != nodes - 1) {
    problems.push_back("auxiliary graph is disconnected");
  }
  return problems;
}

struct SummationResult {
  /// y_i(S) per source.
  Vector source_values;
  /// z_l(S) per link.
  Vector link_values;
  int rounds = 0;
  /// Round-by-round values, index t holds y(t) and z(t); filled on request.
  std::vector<Vector> source_history;
  std::vector<Vector> link_history;
};

/**
 * Runs the S-round summation. Every source and link ends holding
 * sum(y_star) + sum_l |S(l)| z_star_l.
 */
inline SummationResult distributed_sum(const Network& net,
                                       const AuxiliaryGraph& aux,
                                       const Vector& y_star,
                                       const Vector& z_star,
                                       bool keep_history = false,
                                       MessageMetrics* metrics = nullptr) {
  int s = net.num_sources();
  int links = net.num_links();
  if (y_star.size() != s || z_star.size() != links) {
    throw Error("summation inputs have the wrong length");
  }

  Vector y(s);
  for (int i = 0; i < s; ++i) {
    double total = y_star[i];
    for (int l : net.route(i)) {
      total += z_star[l];
    }
    y[i] = total;
  }
  Vector z = Vector::Zero(links);

  SummationResult result;
  if (keep_history) {
    result.source_history.push_back(y);
    result.link_history.push_back(z);
  }

  for (int t = 1; t <= s; ++t) {
    Vector z_next(links);
    for (int l = 0; l < links; ++l) {
      const auto& members = aux.theta[l];
      double incoming = 0.0;
      for (int i : members) {
        incoming += y[i];
      }
      z_next[l] = incoming - static_cast<double>(members.size() - 1) * z[l];
    }
    Vector y_next(s);
    for (int i = 0; i < s; ++i) {
      const auto& shared = aux.shared_links_of[i];
      double gathered = 0.0;
      for (int l : shared) {
        gathered += z_next[l];
      }
      y_next[i] = gathered - (static_cast<double>(shared.size()) - 1.0) * y[i];
    }
    y = std::move(y_next);
    z = std::move(z_next);
    if (keep_history) {
      result.source_history.push_back(y);
      result.link_history.push_back(z);
    }
    if (metrics) {
      metrics->summation_rounds += 1;
    }
  }

  result.source_values = std::move(y);
  result.link_values = std::move(z);
  result.rounds = s;
  return result;
}

/// Local summation inputs from a direction and the Hessian diagonal.
inline std::pair<Vector, Vector> summation_inputs(const Network& net,
                                                  const Vector& delta,
                                                  const Vector& hessian_diag) {
  int s = net.num_sources();
  int links = net.num_links();
  Vector weighted = delta.array().square() * hessian_diag.array();
  Vector y_star = weighted.head(s);
  Vector z_star(links);
  for (int l = 0; l < links; ++l) {
    z_star[l] = weighted[s + l] / static_cast<double>(net.users(l).size());
  }
  return {y_star, z_star};
}

/// Decrement estimate used by the stepsize rule, computed by summation.
inline double compute_theta(const Network& net, const AuxiliaryGraph& aux,
                            const Vector& delta, const Vector& hessian_diag,
                            MessageMetrics* metrics = nullptr) {
  auto [y_star, z_star] = summation_inputs(net, delta, hessian_diag);
  SummationResult sum = distributed_sum(net, aux, y_star, z_star, false, metrics);
  double value = sum.source_values[0];
  if (value < 0.0) {
    // Rounding on an all-zero direction can leave a tiny negative residue.
    if (value < -1e-12 * (1.0 + y_star.sum() + z_star.sum())) {
      throw Error("summation produced a negative squared decrement");
    }
    value = 0.0;
  }
  return std::sqrt(value);
}

}  // namespace dnum
