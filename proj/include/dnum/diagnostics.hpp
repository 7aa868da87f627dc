#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dnum/solver.hpp"

namespace dnum {

/// Constants of the damped-phase guarantee for a configuration.
struct DampedConstants {
  /// Lower bound on the inexact decrement while theta >= V.
  double decrement_floor = 0.0;
  /// Largest admissible alpha; nonpositive when the tolerances are too loose.
  double alpha = 0.0;
  /// Guaranteed per-step decrease of f.
  double decrease = 0.0;
  bool valid = false;
};

inline DampedConstants damped_constants(const SolverConfig& config) {
  double b = config.stepsize_constant();
  double V = config.V;
  double p = config.p;
  double root_eps = std::sqrt(config.epsilon);
  DampedConstants out;
  out.decrement_floor = (2.0 * V * b - V + b - 1.0) / b;
  double y = out.decrement_floor;
  out.alpha = (0.5 - p - root_eps / y) / (1.0 + p);
  out.valid = p < 0.5 && y > 0.0 && config.epsilon < std::pow((0.5 - p) * y, 2) &&
              out.alpha > 0.0;
  out.decrease = (2.0 * b - 1.0) * out.alpha * (1.0 + p) * y * y / (1.0 + y);
  return out;
}

/// Scalars of the local quadratic-rate condition for a given phi.
struct QuadraticConstants {
  double phi = 0.267;
  double v = 0.0;
  double xi = 0.0;
  /// Relation: v * 0.68^2 + xi <= 0.68.
  bool next_within_068 = false;
  /// Relation: (0.68 + sqrt(eps)) / (1 - p) <= 1.
  bool inexact_within_068 = false;
  /// Relation: p + sqrt(eps) <= 1 - (4 phi^2)^(1/4) - phi.
  bool tolerance_margin = false;
  /// Smallest delta with xi + v xi <= delta / (4 v); empty unless below 1/2.
  std::optional<double> delta;
};

inline QuadraticConstants quadratic_constants(double p, double epsilon, double phi) {
  double root_eps = std::sqrt(epsilon);
  double gap = 1.0 - p - phi - root_eps;
  QuadraticConstants out;
  out.phi = phi;
  if (!(gap > 0.0)) {
    out.v = std::numeric_limits<double>::infinity();
    out.xi = std::numeric_limits<double>::infinity();
    return out;
  }
  out.v = 1.0 / (gap * gap);
  out.xi = (phi * p + root_eps) / gap + (2.0 * phi * root_eps + epsilon) / (gap * gap);
  out.next_within_068 = out.v * 0.68 * 0.68 + out.xi <= 0.68;
  out.inexact_within_068 = (0.68 + root_eps) / (1.0 - p) <= 1.0;
  out.tolerance_margin =
      p + root_eps <= 1.0 - std::pow(4.0 * phi * phi, 0.25) - phi;
  double delta = 4.0 * out.v * (out.xi + out.v * out.xi);
  if (delta < 0.5) {
    out.delta = delta;
  }
  return out;
}

struct PhaseViolation {
  int k = 0;
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct PhaseReport {
  DampedConstants damped;
  QuadraticConstants quadratic;
  /// Relation (1 + p) * theta + sqrt(eps) <= phi at the latch iterate; empty if no latch.
  std::optional<bool> latch_within_phi;
  int damped_checks = 0;
  int quadratic_checks = 0;
  int suboptimality_checks = 0;
  int sandwich_checks = 0;
  std::vector<PhaseViolation> violations;
};

/**
 * Checks a trace against the convergence-phase inequalities. The trace must
 * carry exact decrements (record_exact_decrement). f_ref is the optimal value
 * of the same barrier problem.
 */
inline PhaseReport phase_diagnostics(const std::vector<IterationRecord>& trace,
                                     const SolverConfig& config, double f_ref,
                                     double phi = 0.267) {
  PhaseReport report;
  report.damped = damped_constants(config);
  report.quadratic = quadratic_constants(config.p, config.epsilon, phi);
  double b = config.stepsize_constant();
  double p = config.p;
  double root_eps = std::sqrt(config.epsilon);
  auto slack = [](double value) { return 1e-9 * std::max(1.0, std::abs(value)); };
  auto flag = [&](int k, const char* check, double lhs, double rhs) {
    report.violations.push_back({k, check, lhs, rhs});
  };

  for (std::size_t n = 0; n < trace.size(); ++n) {
    const IterationRecord& rec = trace[n];
    double exact = rec.exact_decrement;
    if (std::isnan(exact)) {
      throw Error("phase diagnostics need exact decrements in the trace");
    }
    bool has_next = n + 1 < trace.size();

    ++report.sandwich_checks;
    double low = (1.0 - p) * rec.lambda_tilde - root_eps;
    double high = (1.0 + p) * rec.lambda_tilde + root_eps;
    if (exact < low - 1e-12 || exact > high + 1e-12) {
      flag(rec.k, "decrement_sandwich", exact, exact < low ? low : high);
    }

    if (rec.phase == Phase::Damped && rec.stepsize > 0.0) {
      double middle = b / (rec.theta + 1.0);
      if (middle < (2.0 * b - 1.0) / (rec.lambda_tilde + 1.0) - 1e-15 ||
          middle > 1.0 / (rec.lambda_tilde + 1.0) + 1e-15) {
        flag(rec.k, "stepsize_bracket", middle, 1.0 / (rec.lambda_tilde + 1.0));
      }
      if (has_next) {
        ++report.damped_checks;
        double change = trace[n + 1].f - rec.f;
        if (change > -report.damped.decrease + slack(rec.f)) {
          flag(rec.k, "damped_decrease", change, -report.damped.decrease);
        }
      }
    }

    if (rec.phase == Phase::Quadratic && !report.latch_within_phi) {
      report.latch_within_phi = (1.0 + p) * rec.theta + root_eps <= phi;
    }
    if (rec.phase == Phase::Quadratic && rec.stepsize > 0.0 && has_next) {
      ++report.quadratic_checks;
      double next = trace[n + 1].exact_decrement;
      double bound = report.quadratic.v * exact * exact + report.quadratic.xi;
      if (next > bound + 1e-12) {
        flag(trace[n + 1].k, "quadratic_rate", next, bound);
      }
    }

    if (exact <= 0.68) {
      ++report.suboptimality_checks;
      double bound = rec.f - exact * exact;
      if (f_ref < bound - slack(rec.f)) {
        flag(rec.k, "suboptimality", f_ref, bound);
      }
    }
  }
  return report;
}

}  // namespace dnum
