#pragma once

// Truncated stick-breaking Dirichlet-process mixtures.
//
// Sticks v_k ~ Beta(1, stick_eta) for k < T - 1 and v_{T-1} = 1, so
// pi_k = v_k prod_{j<k} (1 - v_j). Components are either Gaussian means with a
// known per-dimension precision (NormalMean prior, dense observations) or
// topic Dirichlets with per-token categorical likelihoods (Document
// observations). Global parameters are stored flat as
//   [(a_0, b_0) ... (a_{T-2}, b_{T-2})][component_0] ... [component_{T-1}].

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "popvb/document.hpp"
#include "popvb/expfam.hpp"
#include "popvb/score.hpp"

namespace popvb {

using Observation = std::vector<double>;

struct DpMixSpec {
  std::size_t truncation = 100;
  double stick_eta = 1.0;
  // NormalMean for Gaussian components, Dirichlet for text components.
  NatParam component_prior = NatParam(FamilyKind::normal_mean({1.0}), {0.0, 1.0});
  // Observation dimensions treated as given at prediction time (Gaussian only).
  std::vector<std::size_t> conditioned_dims;

  const FamilyKind& component_family() const { return component_prior.family; }
  std::size_t obs_dim() const { return component_prior.family.dim(); }
  void validate() const;
};

// NormalMean prior with the given mean and pseudo-count n0: (tau * mean * n0, n0).
NatParam gaussian_component_prior(std::span<const double> mean, double pseudo_count, std::vector<double> precision);

struct DpGlobalState {
  std::size_t truncation = 0;
  std::vector<double> lambda;
  // E[log pi_k] under the truncated sticks.
  std::vector<double> elog_pi;
  // mean_params of each component block, T x block_size.
  std::vector<double> component_expectations;
  std::size_t block_size = 0;

  std::span<const double> stick(std::size_t k) const { return std::span<const double>(lambda).subspan(2 * k, 2); }
  std::span<const double> component(std::size_t k) const {
    return std::span<const double>(lambda).subspan(2 * (truncation - 1) + k * block_size, block_size);
  }
  std::span<const double> expectation(std::size_t k) const {
    return std::span<const double>(component_expectations).subspan(k * block_size, block_size);
  }
};

Layout dp_layout(const DpMixSpec& spec);
void refresh_expectations(DpGlobalState& global, const DpMixSpec& spec);
DpGlobalState make_dp_global(const DpMixSpec& spec, std::vector<double> lambda);

std::vector<double> dp_expected_log_pi(const DpGlobalState& global);
// E[pi_k] from the stick means; sums to one.
std::vector<double> dp_expected_weights(const DpGlobalState& global);

// Responsibilities r_k proportional to exp(E[log pi_k] + E[log p(x | beta_k)]).
std::vector<double> dp_local_step(const Observation& obs, const DpGlobalState& global, const DpMixSpec& spec);
std::vector<double> dp_local_step(const Document& doc, const DpGlobalState& global, const DpMixSpec& spec);

// Stick k receives (r_k, sum_{j>k} r_j); component k receives r_k t(x).
SuffStats dp_suff_stats(const Observation& obs, std::span<const double> r, const DpMixSpec& spec);
SuffStats dp_suff_stats(const Document& doc, std::span<const double> r, const DpMixSpec& spec);

// log p(target dims | conditioned dims) under plug-in posterior means.
double dp_predictive_log_lik(const Observation& obs, const DpGlobalState& global, const DpMixSpec& spec);
// Split-half score for text components: responsibilities from `first`, tokens of `second` scored.
PredictiveScore dp_text_predictive(const Document& first, const Document& second, const DpGlobalState& global,
                                   const DpMixSpec& spec);

// Component policies: E_q[log p(x | beta_k)] from the component's mean
// parameters, the statistic t(x), and the collapsed predictive density used
// for seeding.
struct GaussianComponents {
  using Datum = Observation;
  static constexpr Family kFamily = Family::kNormalMean;
  static void check(const FamilyKind& family, const Datum& x);
  static double expected_log_lik(const FamilyKind& family, std::span<const double> expectation, const Datum& x);
  static void add_stats(const FamilyKind& family, const Datum& x, double weight, std::span<double> into);
  static double log_predictive(const FamilyKind& family, std::span<const double> lambda, const Datum& x);
};

struct MultinomialComponents {
  using Datum = Document;
  static constexpr Family kFamily = Family::kDirichlet;
  static void check(const FamilyKind& family, const Datum& x);
  static double expected_log_lik(const FamilyKind& family, std::span<const double> expectation, const Datum& x);
  static void add_stats(const FamilyKind& family, const Datum& x, double weight, std::span<double> into);
  static double log_predictive(const FamilyKind& family, std::span<const double> lambda, const Datum& x);
};

// Engine adapter. `Components` is GaussianComponents or MultinomialComponents.
template <typename Components>
class DpMixture {
 public:
  using Datum = typename Components::Datum;
  using Global = DpGlobalState;
  using Local = std::vector<double>;

  explicit DpMixture(DpMixSpec spec);

  const DpMixSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }
  const std::vector<double>& prior() const { return prior_; }

  // Sticks and components at the prior.
  Global init_global(std::uint64_t seed = 0) const;
  Global global_from(std::vector<double> lambda) const;

  // Sequential hard assignment of `sample` under collapsed predictive
  // densities with Chinese-restaurant weights, opening a component whenever
  // the prior predictive (weighted by stick_eta) beats every open one.
  // Components are ordered by size and set to prior + assigned statistics;
  // sticks to (1 + n_k, stick_eta + n_{>k}). Unused components stay at the prior.
  Global seed_from_sample(std::span<const Datum> sample) const;

  static std::span<double> params(Global& g) { return g.lambda; }
  static std::span<const double> params(const Global& g) { return g.lambda; }
  void refresh(Global& g) const { refresh_expectations(g, spec_); }

  void validate_datum(const Datum& x) const;
  Local local_step(const Datum& x, const Global& g) const { return dp_local_step(x, g, spec_); }
  bool converged(const Local&) const { return true; }
  void add_stats(const Datum& x, const Local& r, std::span<double> into) const;
  double local_elbo(const Datum& x, const Local& r, const Global& expectations) const;
  double global_kl(const Global& g) const;
  Global monte_carlo_expectations(const Global& g, int draws, std::mt19937_64& rng) const;

 private:
  DpMixSpec spec_;
  Layout layout_;
  std::vector<double> prior_;
};

using DpGaussianMixture = DpMixture<GaussianComponents>;
using DpTextMixture = DpMixture<MultinomialComponents>;

}  // namespace popvb
