#pragma once

#include <span>

namespace popvb {

// Digamma and log-gamma for positive arguments. Both use upward recurrence to
// x >= 10 followed by the asymptotic (Stirling) series; absolute error is
// below 1e-10 for digamma on [1e-3, 1e6]. Non-positive arguments throw
// std::domain_error.
double digamma(double x);
double log_gamma(double x);

// log(sum(exp(v))), -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

}  // namespace popvb
