#include "popvb/engine.hpp"

namespace popvb {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kPopVB:
      return "popvb";
    case Algorithm::kSVI:
      return "svi";
    case Algorithm::kSVB:
      return "svb";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "popvb") return Algorithm::kPopVB;
  if (name == "svi") return Algorithm::kSVI;
  if (name == "svb") return Algorithm::kSVB;
  throw ConfigError("algorithm", "unknown algorithm '" + std::string(name) + "' (expected popvb, svi or svb)");
}

void OptimizerConfig::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate", "must lie in (0, 1]");
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
}

std::vector<double> natural_gradient(std::span<const double> zeta, std::span<const double> lambda,
                                     const SuffStats& batch_stats, double alpha, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("natural gradient needs a nonempty minibatch");
  if (zeta.size() != lambda.size() || batch_stats.values.size() != lambda.size()) {
    throw std::invalid_argument("natural gradient layout mismatch");
  }
  if (batch_stats.weight != static_cast<double>(batch_size)) {
    throw std::invalid_argument("batch statistics weight does not match the minibatch size");
  }
  const double scale = alpha / static_cast<double>(batch_size);
  std::vector<double> g(lambda.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = zeta[i] - lambda[i] + scale * batch_stats.values[i];
  return g;
}

}  // namespace popvb
