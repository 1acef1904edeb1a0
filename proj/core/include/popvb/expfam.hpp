#pragma once

// Exponential-family primitives shared by the model adapters.
//
// Natural-parameter layouts (frozen; SuffStats addition relies on them):
//   Dirichlet(K)        K pseudo-counts p_k > 0; a(p) = sum lnG(p_k) - lnG(sum p)
//   Beta                (a, b), both > 0; the K = 2 Dirichlet
//   Categorical(K)      K unnormalised log-weights; a(p) = log sum exp(p)
//   GaussianKnownPrecision(D, tau)
//                       tau_d * mean_d per dimension; a(p) = sum p_d^2 / (2 tau_d)
//   NormalMean(D, tau)  conjugate prior over the mean of a GaussianKnownPrecision
//                       likelihood: (s_1..s_D, n) with density over mu
//                       exp(sum s_d mu_d - n sum tau_d mu_d^2 / 2 - a); n > 0.
//                       Its statistic t(mu) = (mu, -sum tau_d mu_d^2 / 2), and a
//                       GaussianKnownPrecision observation x contributes (tau * x, 1).

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace popvb {

enum class Family { kDirichlet, kBeta, kCategorical, kGaussianKnownPrecision, kNormalMean };

class FamilyKind {
 public:
  static FamilyKind dirichlet(std::size_t dim);
  static FamilyKind beta();
  static FamilyKind categorical(std::size_t dim);
  static FamilyKind gaussian(std::vector<double> precision);
  static FamilyKind normal_mean(std::vector<double> precision);

  Family tag() const { return tag_; }
  // Support dimension (1 for Beta).
  std::size_t dim() const { return dim_; }
  std::span<const double> precision() const { return precision_; }
  // Number of natural coordinates.
  std::size_t coordinate_count() const;

  bool operator==(const FamilyKind&) const = default;

 private:
  FamilyKind(Family tag, std::size_t dim, std::vector<double> precision);

  Family tag_;
  std::size_t dim_;
  std::vector<double> precision_;
};

struct NatParam {
  NatParam(FamilyKind family, std::vector<double> values);

  FamilyKind family;
  std::vector<double> values;
};

// Ordered sequence of family blocks describing a flat parameter/statistic
// vector. Copies share the block list.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<FamilyKind> blocks);

  std::span<const FamilyKind> blocks() const;
  std::size_t block_count() const { return offsets_ ? offsets_->size() - 1 : 0; }
  std::size_t size() const { return offsets_ ? offsets_->back() : 0; }
  std::size_t offset(std::size_t block) const { return (*offsets_)[block]; }

  bool operator==(const Layout& other) const;

 private:
  std::shared_ptr<const std::vector<FamilyKind>> blocks_;
  std::shared_ptr<const std::vector<std::size_t>> offsets_;
};

struct SuffStats {
  Layout layout;
  std::vector<double> values;
  // Number of data points represented.
  double weight = 0.0;

  static SuffStats zeros(Layout layout);
  static SuffStats zeros(const FamilyKind& family);
};

// Span overloads operate on a single block of coordinates.
double log_normalizer(const FamilyKind& family, std::span<const double> p);
void mean_params(const FamilyKind& family, std::span<const double> p, std::span<double> out);

double log_normalizer(const NatParam& p);
std::vector<double> mean_params(const NatParam& p);

SuffStats combine_stats(const SuffStats& a, const SuffStats& b);
SuffStats scale_stats(const SuffStats& s, double c);
// In-place a += b.
void accumulate_stats(SuffStats& into, const SuffStats& b);

// Continuous support: Dirichlet (point on the simplex), Beta (v in (0, 1)),
// GaussianKnownPrecision (x in R^D), NormalMean (mu in R^D).
double log_density(const NatParam& p, std::span<const double> x);
// Categorical support {0..K-1}; the base measure is 1.
double log_density(const NatParam& p, std::size_t category);

// KL(q || p) between two members of the same family, computed as
// a(p) - a(q) + (q - p) . grad a(q).
double kl_divergence(const FamilyKind& family, std::span<const double> q, std::span<const double> p);

// Draws beta ~ family(p) and writes its sufficient statistic t(beta), whose
// expectation is mean_params(p). Used for Monte-Carlo expectations.
void sample_statistic(const FamilyKind& family, std::span<const double> p, std::mt19937_64& rng,
                      std::span<double> out);

// Raises every positivity-constrained coordinate of a flat vector with the
// given layout to at least `floor`. Returns the number of coordinates changed.
std::size_t enforce_floor(const Layout& layout, std::span<double> values, double floor);

// Throws std::domain_error when p violates the family's positivity constraints.
void validate(const FamilyKind& family, std::span<const double> p);

}  // namespace popvb
