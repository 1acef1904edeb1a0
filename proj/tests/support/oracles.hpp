#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They rely on boost and the standard library only, never on popvb numerics.

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Per-document ELBO of LDA at q(theta) = Dir(gamma) with phi at its optimum
// given gamma. `counts[w]` are token counts, `elog_beta` is K x V row-major.
inline double lda_elbo_at(const std::vector<double>& gamma, const std::vector<int>& counts,
                          const std::vector<double>& elog_beta, double gamma_doc) {
  using boost::math::digamma;
  const std::size_t K = gamma.size();
  const std::size_t V = counts.size();
  double total = 0.0;
  for (double g : gamma) total += g;
  std::vector<double> elog_theta(K);
  for (std::size_t k = 0; k < K; ++k) elog_theta[k] = digamma(gamma[k]) - digamma(total);
  double elbo = std::lgamma(K * gamma_doc) - K * std::lgamma(gamma_doc);
  elbo -= std::lgamma(total);
  for (std::size_t k = 0; k < K; ++k) {
    elbo += (gamma_doc - 1.0) * elog_theta[k];
    elbo += std::lgamma(gamma[k]) - (gamma[k] - 1.0) * elog_theta[k];
  }
  for (std::size_t w = 0; w < V; ++w) {
    if (counts[w] == 0) continue;
    std::vector<double> s(K);
    for (std::size_t k = 0; k < K; ++k) s[k] = elog_theta[k] + elog_beta[k * V + w];
    elbo += counts[w] * logsumexp(s);
  }
  return elbo;
}

// Maximum of lda_elbo_at over two-topic gamma by successively refined grids
// in log space.
inline double lda_elbo_grid_max(const std::vector<int>& counts, const std::vector<double>& elog_beta,
                                double gamma_doc) {
  double best = -std::numeric_limits<double>::infinity();
  double c0 = 0.0;
  double c1 = 0.0;
  double span = 6.0;
  const int n = 61;
  for (int round = 0; round < 14; ++round) {
    double b0 = c0;
    double b1 = c1;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double l0 = c0 + span * (2.0 * i / (n - 1) - 1.0);
        const double l1 = c1 + span * (2.0 * j / (n - 1) - 1.0);
        const double v = lda_elbo_at({std::exp(l0), std::exp(l1)}, counts, elog_beta, gamma_doc);
        if (v > best) {
          best = v;
          b0 = l0;
          b1 = l1;
        }
      }
    }
    c0 = b0;
    c1 = b1;
    span *= 0.25;
  }
  return best;
}

inline double normal_logpdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
}

}  // namespace oracle
