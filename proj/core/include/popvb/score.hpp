#pragma once

#include <cstdint>

namespace popvb {

// Held-out log likelihood of one datum: total nats over `count` scored units
// (tokens for text, one per observation otherwise).
struct PredictiveScore {
  double log_lik = 0.0;
  std::uint64_t count = 0;

  double average() const { return log_lik / static_cast<double>(count); }
};

}  // namespace popvb
