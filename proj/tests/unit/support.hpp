#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dnum/random_network.hpp"
#include "dnum/model.hpp"

namespace dnum::testing {

inline std::string data_file(const char* name) {
  return std::string(DNUM_DATA_DIR) + "/" + name;
}

/// Two sources over five links; the middle link is shared.
inline Network fig1(double weight = 1.0) {
  Vector caps(5);
  caps << 1, 1, 2, 1, 1;
  return make_network({{0, 2, 3}, {1, 2, 4}}, caps,
                      {UtilitySpec::logarithmic(weight), UtilitySpec::logarithmic(weight)});
}

inline Network single_link(double capacity = 1.0) {
  Vector caps(1);
  caps << capacity;
  return make_network({{0}}, caps, {UtilitySpec::logarithmic(1.0)});
}

/// Random instance with a routing density that keeps redraws rare.
inline Network random_instance(std::uint64_t seed, int max_links = 20,
                               int max_sources = 10) {
  std::mt19937_64 gen(seed);
  int links = 1 + static_cast<int>(gen() % max_links);
  int sources = 1 + static_cast<int>(gen() % max_sources);
  double p = std::max(0.5, 2.0 / std::min(links, sources));
  return random_network(links, sources, std::min(p, 1.0), seed * 7919 + 1);
}

/// Strictly feasible point other than the standard start.
inline Vector random_feasible_point(const Network& net, std::mt19937_64& gen) {
  int s = net.num_sources();
  double unit = net.min_capacity() / s;
  Vector x(s + net.num_links());
  for (int i = 0; i < s; ++i) {
    x[i] = detail::uniform(gen, 0.05, 0.95) * unit;
  }
  x.tail(net.num_links()) = net.capacities() - net.link_loads(x.head(s));
  return x;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& gen, double lo = -1.0,
                            double hi = 1.0) {
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    v[k] = detail::uniform(gen, lo, hi);
  }
  return v;
}

}  // namespace dnum::testing
