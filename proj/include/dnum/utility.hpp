#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dnum {

/// Thrown for malformed input or violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class UtilityFamily { Logarithmic, Quadratic };

/**
 * Per-source utility. Two families are supported:
 *
 *   Logarithmic: U(s) = weight * log(s)
 *   Quadratic:   U(s) = linear * s - quadratic / 2 * s^2
 */
struct UtilitySpec {
  UtilityFamily family = UtilityFamily::Logarithmic;
  double weight = 1.0;
  double linear = 0.0;
  double quadratic = 0.0;

  static UtilitySpec logarithmic(double weight) {
    return {UtilityFamily::Logarithmic, weight, 0.0, 0.0};
  }

  static UtilitySpec quadratic_utility(double linear, double curvature) {
    return {UtilityFamily::Quadratic, 0.0, linear, curvature};
  }

  double value(double s) const {
    if (family == UtilityFamily::Logarithmic) {
      return weight * std::log(s);
    }
    return linear * s - 0.5 * quadratic * s * s;
  }

  double first(double s) const {
    if (family == UtilityFamily::Logarithmic) {
      return weight / s;
    }
    return linear - quadratic * s;
  }

  double second(double s) const {
    if (family == UtilityFamily::Logarithmic) {
      return -weight / (s * s);
    }
    return -quadratic;
  }

  double third(double s) const {
    if (family == UtilityFamily::Logarithmic) {
      return 2.0 * weight / (s * s * s);
    }
    return 0.0;
  }

  /// Maximizer of U(s) - price * s over [0, cap].
  double best_response(double price, double cap) const {
    if (family == UtilityFamily::Logarithmic) {
      if (price <= 0.0) {
        return cap;
      }
      return std::min(weight / price, cap);
    }
    if (quadratic <= 0.0) {
      return linear > price ? cap : 0.0;
    }
    return std::clamp((linear - price) / quadratic, 0.0, cap);
  }

  std::string family_name() const {
    return family == UtilityFamily::Logarithmic ? "log" : "quadratic";
  }
};

/**
 * Samples U on a logarithmic grid over (0, upper] and checks strict
 * concavity, monotonicity and self-concordance of -U. Returns an empty string
 * on success, otherwise a description of the first violation.
 */
inline std::string check_utility(const UtilitySpec& u, double upper,
                                 int samples = 200) {
  if (u.family == UtilityFamily::Logarithmic) {
    if (!std::isfinite(u.weight) || !(u.weight > 0.0)) {
      return "logarithmic weight must be positive";
    }
  } else if (!std::isfinite(u.linear) || !std::isfinite(u.quadratic) ||
             !(u.quadratic > 0.0)) {
    return "quadratic curvature must be positive and finite";
  }
  if (!(upper > 0.0)) {
    return "sampling range must be positive";
  }

  // Grid from upper * 1e-8 to upper.
  for (int k = 0; k < samples; ++k) {
    double s = upper * std::pow(10.0, -8.0 * k / (samples - 1));
    double d1 = u.first(s);
    double d2 = u.second(s);
    double d3 = u.third(s);
    if (!(d2 < 0.0)) {
      return "utility is not strictly concave";
    }
    if (d1 < 0.0) {
      return "utility decreases inside the capacity range";
    }
    double curvature = -d2;
    if (std::abs(d3) > 2.0 * std::pow(curvature, 1.5) * (1.0 + 1e-12)) {
      return "negative utility is not self-concordant";
    }
  }
  return {};
}

}  // namespace dnum
