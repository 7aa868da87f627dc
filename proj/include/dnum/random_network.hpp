#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dnum/network.hpp"
#include "dnum/rng.hpp"

namespace dnum {

struct InstanceDistribution {
  double weight_low = 5.0;
  double weight_high = 15.0;
  double capacity_low = 20.0;
  double capacity_high = 50.0;
  int redraw_cap = 10'000;
};

/// Draws an L x S Bernoulli routing matrix, redrawing until no row or column is empty.
inline Matrix random_routing(int links, int sources, double bernoulli_p,
                             std::mt19937_64& gen, int redraw_cap = 10'000) {
  if (links <= 0 || sources <= 0) {
    throw Error("link and source counts must be positive");
  }
  if (!(bernoulli_p > 0.0) || bernoulli_p > 1.0) {
    throw Error("Bernoulli probability must lie in (0, 1]");
  }
  for (int attempt = 0; attempt < redraw_cap; ++attempt) {
    Matrix r(links, sources);
    for (int l = 0; l < links; ++l) {
      for (int i = 0; i < sources; ++i) {
        r(l, i) = detail::unit_uniform(gen) < bernoulli_p ? 1.0 : 0.0;
      }
    }
    bool valid = (r.rowwise().sum().array() > 0.0).all() &&
                 (r.colwise().sum().array() > 0.0).all();
    if (valid && detail::count_components(detail::routes_from_routing(r),
                                           links) == 1) {
      return r;
    }
  }
  throw Error("no valid routing matrix within the redraw cap");
}

/**
 * Random instance: Bernoulli routing, weighted log utilities and uniform
 * capacities drawn from dist.
 */
inline Network random_network(int links, int sources, double bernoulli_p,
                              std::uint64_t seed,
                              const InstanceDistribution& dist = {}) {
  std::mt19937_64 gen(seed);
  Matrix r = random_routing(links, sources, bernoulli_p, gen, dist.redraw_cap);
  std::vector<UtilitySpec> utilities;
  utilities.reserve(sources);
  for (int i = 0; i < sources; ++i) {
    utilities.push_back(UtilitySpec::logarithmic(
        detail::uniform(gen, dist.weight_low, dist.weight_high)));
  }
  Vector caps(links);
  for (int l = 0; l < links; ++l) {
    caps[l] = detail::uniform(gen, dist.capacity_low, dist.capacity_high);
  }
  return build_network(r, caps, std::move(utilities));
}

}  // namespace dnum
