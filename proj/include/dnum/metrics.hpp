#pragma once

#include <cstdint>

namespace dnum {

/**
 * Message-level bookkeeping for one solve. Distributed routines take an
 * optional pointer and only ever add to it.
 */
struct MessageMetrics {
  /// Source to link pushes of (weighted) route information.
  std::int64_t source_pushes = 0;
  /// Link to source feedback of aggregated route prices.
  std::int64_t route_feedbacks = 0;
  std::int64_t dual_rounds = 0;
  std::int64_t consensus_rounds = 0;
  std::int64_t summation_rounds = 0;

  MessageMetrics& operator+=(const MessageMetrics& other) {
    source_pushes += other.source_pushes;
    route_feedbacks += other.route_feedbacks;
    dual_rounds += other.dual_rounds;
    consensus_rounds += other.consensus_rounds;
    summation_rounds += other.summation_rounds;
    return *this;
  }

  bool operator==(const MessageMetrics&) const = default;
};

}  // namespace dnum
