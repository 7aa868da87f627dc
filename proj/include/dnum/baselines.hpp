#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dnum/model.hpp"

namespace dnum {

struct FirstOrderConfig {
  double stepsize = 1e-3;
  std::int64_t max_iters = 200'000;
  /// Relative half-width of the band around the reference objective.
  double band = 0.05;
  /// Consecutive in-band iterations required before stopping.
  int band_hold = 50;
  /// In-band iterates must also overshoot no capacity by more than this fraction.
  double feas_tol = 1e-3;
  /// Without a reference: stop once the relative objective change stays below this.
  double change_tol = 1e-9;
  /// Rate cap for zero route prices; NaN selects the largest capacity.
  double rate_cap = std::numeric_limits<double>::quiet_NaN();
  /// Floor on the per-link curvature used by diagonal scaling.
  double curvature_floor = 1e-6;
  /// Diagonal scaling with every curvature set to 1 (reduces to the subgradient method).
  bool unit_scaling = false;
  double initial_price = 0.0;
  /// Reference value of the negative utility, enabling the band rule.
  std::optional<double> reference;
  bool record_trace = true;
};

enum class FirstOrderStatus { Converged, IterationCap, Diverged };

inline const char* status_name(FirstOrderStatus status) {
  switch (status) {
    case FirstOrderStatus::Converged:
      return "converged";
    case FirstOrderStatus::IterationCap:
      return "iteration_cap";
    case FirstOrderStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

struct FirstOrderRecord {
  std::int64_t k = 0;
  double h = 0.0;
  double min_slack = 0.0;
  /// Largest capacity overshoot relative to the largest capacity, 0 when feasible.
  double feas_residual = 0.0;
};

struct FirstOrderResult {
  Vector rates;
  Vector prices;
  std::vector<FirstOrderRecord> trace;
  FirstOrderStatus status = FirstOrderStatus::IterationCap;
  /// Price updates performed.
  std::int64_t iterations = 0;
  /// Price updates before the final stretch of in-band iterates began; -1 if never.
  std::int64_t band_entry = -1;
};

inline void validate(const FirstOrderConfig& config) {
  if (!(config.stepsize > 0.0) || !std::isfinite(config.stepsize)) {
    throw Error("first-order stepsize must be positive");
  }
  if (config.max_iters <= 0) {
    throw Error("max_iters must be positive");
  }
  if (!(config.band > 0.0) || config.band_hold <= 0) {
    throw Error("band and band_hold must be positive");
  }
  if (!(config.curvature_floor > 0.0)) {
    throw Error("curvature floor must be positive");
  }
  if (!(config.feas_tol >= 0.0)) {
    throw Error("feasibility tolerance must be nonnegative");
  }
  if (config.initial_price < 0.0) {
    throw Error("initial price must be nonnegative");
  }
}

namespace detail {

inline Vector best_responses(const Network& net, const Vector& prices, double cap) {
  Vector route = net.route_sums(prices);
  Vector rates(net.num_sources());
  for (int i = 0; i < net.num_sources(); ++i) {
    rates[i] = net.utility(i).best_response(route[i], cap);
  }
  return rates;
}

inline double negative_utility(const Network& net, const Vector& rates) {
  double total = 0.0;
  for (int i = 0; i < net.num_sources(); ++i) {
    total -= net.utility(i).value(rates[i]);
  }
  return total;
}

/// Shared price loop; `scaling` returns the per-link divisor of the price step.
template <typename Scaling>
FirstOrderResult price_iteration(const Network& net, const FirstOrderConfig& config,
                                 Scaling&& scaling) {
  validate(config);
  double cap = std::isnan(config.rate_cap) ? net.max_capacity() : config.rate_cap;
  if (!(cap > 0.0)) {
    throw Error("rate cap must be positive");
  }
  const Vector& c = net.capacities();
  double c_max = net.max_capacity();

  FirstOrderResult out;
  Vector prices = Vector::Constant(net.num_links(), config.initial_price);
  Vector rates = best_responses(net, prices, cap);
  double previous_h = std::numeric_limits<double>::quiet_NaN();
  std::int64_t streak = 0;

  for (std::int64_t k = 0;; ++k) {
    Vector load = net.link_loads(rates);
    double h = negative_utility(net, rates);
    if (!std::isfinite(h) || !prices.allFinite() || prices.maxCoeff() > 1e15) {
      out.status = FirstOrderStatus::Diverged;
      break;
    }
    if (config.record_trace) {
      Vector slack = c - load;
      out.trace.push_back({k, h, slack.minCoeff(),
                           std::max(0.0, -slack.minCoeff()) / c_max});
    }

    bool inside;
    if (config.reference) {
      double ref = *config.reference;
      double overshoot = ((load - c).array() / c.array()).maxCoeff();
      inside = std::abs(h - ref) <= config.band * std::abs(ref) &&
               overshoot <= config.feas_tol;
    } else {
      inside = k > 0 && std::abs(h - previous_h) <=
                            config.change_tol * std::max(1.0, std::abs(h));
    }
    streak = inside ? streak + 1 : 0;
    previous_h = h;
    if (streak >= config.band_hold) {
      out.status = FirstOrderStatus::Converged;
      out.band_entry = k - streak + 1;
      break;
    }
    if (k >= config.max_iters) {
      out.status = FirstOrderStatus::IterationCap;
      if (streak > 0) {
        out.band_entry = k - streak + 1;
      }
      break;
    }

    Vector divisor = scaling(rates);
    for (int l = 0; l < net.num_links(); ++l) {
      double step = config.stepsize * (load[l] - c[l]) / divisor[l];
      prices[l] = std::max(0.0, prices[l] + step);
    }
    rates = best_responses(net, prices, cap);
    out.iterations = k + 1;
  }
  out.rates = std::move(rates);
  out.prices = std::move(prices);
  return out;
}

}  // namespace detail

/// Dual decomposition: prices move along the capacity violation with a constant step.
inline FirstOrderResult subgradient_solve(const Network& net,
                                          const FirstOrderConfig& config) {
  Vector ones = Vector::Ones(net.num_links());
  return detail::price_iteration(net, config,
                                 [&](const Vector&) -> const Vector& { return ones; });
}

/**
 * Price steps divided by a diagonal estimate of the dual curvature: for each
 * link, the sum of 1/|U_i''(s_i)| over the sources crossing it.
 */
inline FirstOrderResult diagonal_scaled_solve(const Network& net,
                                              const FirstOrderConfig& config) {
  Vector divisor(net.num_links());
  return detail::price_iteration(net, config, [&](const Vector& rates) -> const Vector& {
    for (int l = 0; l < net.num_links(); ++l) {
      if (config.unit_scaling) {
        divisor[l] = 1.0;
        continue;
      }
      double curvature = 0.0;
      for (int i : net.users(l)) {
        double second = -net.utility(i).second(std::max(rates[i], 1e-300));
        curvature += second > 0.0 ? 1.0 / second
                                  : std::numeric_limits<double>::infinity();
      }
      divisor[l] = std::max(curvature, config.curvature_floor);
    }
    return divisor;
  });
}

enum class BaselineMethod { Subgradient, DiagonalScaled };

inline const char* method_name(BaselineMethod method) {
  return method == BaselineMethod::Subgradient ? "subgradient" : "diagonal_scaled";
}

inline FirstOrderResult run_baseline(BaselineMethod method, const Network& net,
                                     const FirstOrderConfig& config) {
  return method == BaselineMethod::Subgradient ? subgradient_solve(net, config)
                                               : diagonal_scaled_solve(net, config);
}

struct StepsizeSearch {
  double stepsize = 0.0;
  /// Mean band-entry count on the calibration networks.
  double mean_iterations = std::numeric_limits<double>::infinity();
  /// Stepsizes at which every calibration network converged.
  std::vector<double> admissible;
};

/**
 * Coarse grid search over constant stepsizes. A stepsize qualifies when the
 * method settles in the configured band and also in the tighter final_tol band
 * on every network; the qualifying stepsize with the smallest mean band-entry
 * count wins.
 */
inline StepsizeSearch search_stepsize(BaselineMethod method,
                                      std::span<const Network> networks,
                                      std::span<const double> references,
                                      std::span<const double> grid,
                                      FirstOrderConfig base, double final_tol = 0.005) {
  if (networks.size() != references.size()) {
    throw Error("one reference per calibration network is required");
  }
  StepsizeSearch out;
  base.record_trace = false;
  for (double alpha : grid) {
    base.stepsize = alpha;
    double total = 0.0;
    bool ok = true;
    for (std::size_t n = 0; n < networks.size() && ok; ++n) {
      base.reference = references[n];
      FirstOrderResult r = run_baseline(method, networks[n], base);
      total += static_cast<double>(r.band_entry);
      FirstOrderConfig tight = base;
      tight.band = final_tol;
      FirstOrderResult close = run_baseline(method, networks[n], tight);
      ok = r.status == FirstOrderStatus::Converged &&
           close.status == FirstOrderStatus::Converged;
    }
    if (!ok) {
      continue;
    }
    out.admissible.push_back(alpha);
    double mean = total / static_cast<double>(networks.size());
    if (mean < out.mean_iterations) {
      out.mean_iterations = mean;
      out.stepsize = alpha;
    }
  }
  return out;
}

}  // namespace dnum
