#pragma once

#include <random>

namespace dnum::detail {

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double low, double high) {
  return low + (high - low) * unit_uniform(gen);
}

}  // namespace dnum::detail
