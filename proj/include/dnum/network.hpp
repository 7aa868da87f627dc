#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dnum/utility.hpp"

namespace dnum {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Immutable problem instance: links with capacities, sources with fixed
 * routes and utilities.
 *
 * Routes keep the link order they were given in, which is the order signals
 * travel along them. The users of a link are kept in ascending source order.
 */
class Network {
 public:
  Network() = default;

  int num_links() const { return static_cast<int>(capacities_.size()); }
  int num_sources() const { return static_cast<int>(routes_.size()); }

  /// Links on the route of source i, in traversal order.
  std::span<const int> route(int i) const { return routes_[i]; }

  /// Sources whose route crosses link l, ascending.
  std::span<const int> users(int l) const { return users_[l]; }

  const Vector& capacities() const { return capacities_; }
  double capacity(int l) const { return capacities_[l]; }
  const UtilitySpec& utility(int i) const { return utilities_[i]; }
  std::span<const UtilitySpec> utilities() const { return utilities_; }

  double min_capacity() const { return capacities_.minCoeff(); }
  double max_capacity() const { return capacities_.maxCoeff(); }

  /// L x S incidence matrix.
  Matrix routing() const {
    Matrix r = Matrix::Zero(num_links(), num_sources());
    for (int i = 0; i < num_sources(); ++i) {
      for (int l : routes_[i]) {
        r(l, i) = 1.0;
      }
    }
    return r;
  }

  /// L x (S + L) constraint matrix [R I].
  Matrix constraint_matrix() const {
    Matrix a = Matrix::Zero(num_links(), num_sources() + num_links());
    a.leftCols(num_sources()) = routing();
    a.rightCols(num_links()).setIdentity();
    return a;
  }

  /// Link loads R * s for a rate vector s.
  Vector link_loads(const Vector& rates) const {
    Vector loads = Vector::Zero(num_links());
    for (int i = 0; i < num_sources(); ++i) {
      for (int l : routes_[i]) {
        loads[l] += rates[i];
      }
    }
    return loads;
  }

  /// Route sums R' * w for a link vector w.
  Vector route_sums(const Vector& link_values) const {
    Vector sums = Vector::Zero(num_sources());
    for (int i = 0; i < num_sources(); ++i) {
      for (int l : routes_[i]) {
        sums[i] += link_values[l];
      }
    }
    return sums;
  }

  friend Network make_network(std::vector<std::vector<int>> routes,
                              Vector capacities,
                              std::vector<UtilitySpec> utilities);

 private:
  std::vector<std::vector<int>> routes_;
  std::vector<std::vector<int>> users_;
  Vector capacities_;
  std::vector<UtilitySpec> utilities_;
};

namespace detail {

/// Number of connected components of the source-link incidence graph.
inline int count_components(const std::vector<std::vector<int>>& routes,
                            int num_links) {
  int s = static_cast<int>(routes.size());
  std::vector<std::vector<int>> users(num_links);
  for (int i = 0; i < s; ++i) {
    for (int l : routes[i]) {
      users[l].push_back(i);
    }
  }
  std::vector<char> seen_source(s, 0);
  std::vector<char> seen_link(num_links, 0);
  int components = 0;
  for (int start = 0; start < s; ++start) {
    if (seen_source[start]) {
      continue;
    }
    ++components;
    std::queue<int> frontier;
    frontier.push(start);
    seen_source[start] = 1;
    while (!frontier.empty()) {
      int i = frontier.front();
      frontier.pop();
      for (int l : routes[i]) {
        if (seen_link[l]) {
          continue;
        }
        seen_link[l] = 1;
        for (int j : users[l]) {
          if (!seen_source[j]) {
            seen_source[j] = 1;
            frontier.push(j);
          }
        }
      }
    }
  }
  return components;
}

/// Per-source ascending link lists of a 0/1 routing matrix.
inline std::vector<std::vector<int>> routes_from_routing(const Matrix& routing) {
  std::vector<std::vector<int>> routes(routing.cols());
  for (Eigen::Index i = 0; i < routing.cols(); ++i) {
    for (Eigen::Index l = 0; l < routing.rows(); ++l) {
      double entry = routing(l, i);
      if (entry == 1.0) {
        routes[i].push_back(static_cast<int>(l));
      } else if (entry != 0.0) {
        throw Error("routing entries must be 0 or 1");
      }
    }
  }
  return routes;
}

}  // namespace detail

/**
 * Validates and builds a network from per-source routes.
 *
 * Throws Error on an empty route, an unused link, an out-of-range or repeated
 * link index, a nonpositive capacity, a utility that fails the concavity and
 * self-concordance sampling, or a disconnected shared-flow structure.
 */
inline Network make_network(std::vector<std::vector<int>> routes,
                            Vector capacities,
                            std::vector<UtilitySpec> utilities) {
  int num_links = static_cast<int>(capacities.size());
  int num_sources = static_cast<int>(routes.size());
  if (num_links == 0 || num_sources == 0) {
    throw Error("network needs at least one link and one source");
  }
  if (static_cast<int>(utilities.size()) != num_sources) {
    throw Error("expected one utility per source");
  }
  for (int l = 0; l < num_links; ++l) {
    if (!(capacities[l] > 0.0) || !std::isfinite(capacities[l])) {
      throw Error("link " + std::to_string(l) +
                  " has a nonpositive capacity");
    }
  }

  std::vector<std::vector<int>> users(num_links);
  for (int i = 0; i < num_sources; ++i) {
    if (routes[i].empty()) {
      throw Error("source " + std::to_string(i) + " has an empty route");
    }
    std::vector<char> on_route(num_links, 0);
    for (int l : routes[i]) {
      if (l < 0 || l >= num_links) {
        throw Error("source " + std::to_string(i) +
                    " routes over unknown link " + std::to_string(l));
      }
      if (on_route[l]) {
        throw Error("source " + std::to_string(i) + " repeats link " +
                    std::to_string(l));
      }
      on_route[l] = 1;
      users[l].push_back(i);
    }
  }
  for (int l = 0; l < num_links; ++l) {
    if (users[l].empty()) {
      throw Error("link " + std::to_string(l) + " carries no source");
    }
  }

  double upper = capacities.maxCoeff();
  for (int i = 0; i < num_sources; ++i) {
    std::string problem = check_utility(utilities[i], upper);
    if (!problem.empty()) {
      throw Error("source " + std::to_string(i) + ": " + problem);
    }
  }

  if (detail::count_components(routes, num_links) != 1) {
    throw Error("links and sources do not form a connected structure");
  }

  Network net;
  net.routes_ = std::move(routes);
  net.users_ = std::move(users);
  net.capacities_ = std::move(capacities);
  net.utilities_ = std::move(utilities);
  return net;
}

/**
 * Builds a network from an L x S 0/1 routing matrix. Each route lists its
 * links in ascending index order.
 */
inline Network build_network(const Matrix& routing, const Vector& capacities,
                             std::vector<UtilitySpec> utilities) {
  if (routing.rows() != capacities.size()) {
    throw Error("routing rows must match the number of capacities");
  }
  if (routing.cols() != static_cast<Eigen::Index>(utilities.size())) {
    throw Error("routing columns must match the number of utilities");
  }
  return make_network(detail::routes_from_routing(routing), capacities,
                      std::move(utilities));
}

}  // namespace dnum
