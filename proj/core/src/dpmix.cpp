#include "popvb/dpmix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "popvb/special.hpp"

namespace popvb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_log_pdf(double x, double mean, double variance) {
  const double diff = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * diff * diff / variance;
}

std::size_t component_offset(std::size_t truncation) { return 2 * (truncation - 1); }

// stick_stats holds (E[log v_k], E[log(1 - v_k)]) pairs for k < T - 1.
std::vector<double> compose_elog_pi(std::span<const double> stick_stats, std::size_t truncation) {
  std::vector<double> out(truncation);
  double rest = 0.0;
  for (std::size_t k = 0; k + 1 < truncation; ++k) {
    out[k] = stick_stats[2 * k] + rest;
    rest += stick_stats[2 * k + 1];
  }
  out[truncation - 1] = rest;
  return out;
}

void normalize_in_place(std::vector<double>& scores) {
  const double lse = log_sum_exp(scores);
  if (!std::isfinite(lse)) throw std::domain_error("all component scores are -inf or non-finite");
  for (double& s : scores) s = std::exp(s - lse);
}

template <typename C>
std::vector<double> responsibilities(const typename C::Datum& x, const DpGlobalState& g, const DpMixSpec& spec) {
  C::check(spec.component_family(), x);
  std::vector<double> scores(g.truncation);
  for (std::size_t k = 0; k < g.truncation; ++k) {
    scores[k] = g.elog_pi[k] + C::expected_log_lik(spec.component_family(), g.expectation(k), x);
  }
  normalize_in_place(scores);
  return scores;
}

template <typename C>
SuffStats suff_stats(const typename C::Datum& x, std::span<const double> r, const DpMixSpec& spec) {
  if (r.size() != spec.truncation) throw std::invalid_argument("responsibilities do not match the truncation");
  C::check(spec.component_family(), x);
  SuffStats s = SuffStats::zeros(dp_layout(spec));
  double tail = 0.0;
  for (std::size_t k = spec.truncation; k-- > 1;) {
    tail += r[k];
    s.values[2 * (k - 1)] = r[k - 1];
    s.values[2 * (k - 1) + 1] = tail;
  }
  const std::size_t block = spec.component_family().coordinate_count();
  for (std::size_t k = 0; k < spec.truncation; ++k) {
    C::add_stats(spec.component_family(), x, r[k],
                 std::span<double>(s.values).subspan(component_offset(spec.truncation) + k * block, block));
  }
  s.weight = 1.0;
  return s;
}

}  // namespace

void DpMixSpec::validate() const {
  if (truncation < 1) throw std::invalid_argument("K_trunc must be at least 1");
  if (!(stick_eta > 0.0)) throw std::invalid_argument("stick_eta must be positive");
  const Family tag = component_family().tag();
  if (tag != Family::kNormalMean && tag != Family::kDirichlet) {
    throw std::invalid_argument("component prior must be NormalMean or Dirichlet");
  }
  popvb::validate(component_family(), component_prior.values);
  if (!conditioned_dims.empty() && tag != Family::kNormalMean) {
    throw std::invalid_argument("conditioned_dims apply to Gaussian components only");
  }
  std::vector<std::size_t> dims = conditioned_dims;
  std::sort(dims.begin(), dims.end());
  if (std::adjacent_find(dims.begin(), dims.end()) != dims.end()) {
    throw std::invalid_argument("conditioned_dims contains a repeated index");
  }
  for (std::size_t d : dims) {
    if (d >= obs_dim()) throw std::invalid_argument("conditioned dim " + std::to_string(d) + " out of range");
  }
  if (tag == Family::kNormalMean && dims.size() >= obs_dim()) {
    throw std::invalid_argument("at least one observation dimension must remain unconditioned");
  }
}

NatParam gaussian_component_prior(std::span<const double> mean, double pseudo_count, std::vector<double> precision) {
  if (mean.size() != precision.size()) throw std::invalid_argument("prior mean and precision differ in length");
  std::vector<double> values(mean.size() + 1);
  for (std::size_t d = 0; d < mean.size(); ++d) values[d] = precision[d] * mean[d] * pseudo_count;
  values.back() = pseudo_count;
  NatParam p(FamilyKind::normal_mean(std::move(precision)), std::move(values));
  validate(p.family, p.values);
  return p;
}

Layout dp_layout(const DpMixSpec& spec) {
  std::vector<FamilyKind> blocks(spec.truncation - 1, FamilyKind::beta());
  blocks.insert(blocks.end(), spec.truncation, spec.component_family());
  return Layout(std::move(blocks));
}

void refresh_expectations(DpGlobalState& g, const DpMixSpec& spec) {
  const std::size_t block = spec.component_family().coordinate_count();
  if (g.truncation != spec.truncation || g.lambda.size() != component_offset(spec.truncation) + spec.truncation * block) {
    throw std::invalid_argument("DP global state does not match its spec");
  }
  g.block_size = block;
  for (std::size_t k = 0; k + 1 < g.truncation; ++k) validate(FamilyKind::beta(), g.stick(k));
  g.elog_pi = dp_expected_log_pi(g);
  g.component_expectations.resize(g.truncation * block);
  for (std::size_t k = 0; k < g.truncation; ++k) {
    mean_params(spec.component_family(), g.component(k),
                std::span<double>(g.component_expectations).subspan(k * block, block));
  }
}

DpGlobalState make_dp_global(const DpMixSpec& spec, std::vector<double> lambda) {
  DpGlobalState g;
  g.truncation = spec.truncation;
  g.block_size = spec.component_family().coordinate_count();
  g.lambda = std::move(lambda);
  refresh_expectations(g, spec);
  return g;
}

std::vector<double> dp_expected_log_pi(const DpGlobalState& g) {
  std::vector<double> stick_stats(2 * (g.truncation - 1));
  for (std::size_t k = 0; k + 1 < g.truncation; ++k) {
    mean_params(FamilyKind::beta(), g.stick(k), std::span<double>(stick_stats).subspan(2 * k, 2));
  }
  return compose_elog_pi(stick_stats, g.truncation);
}

std::vector<double> dp_expected_weights(const DpGlobalState& g) {
  std::vector<double> w(g.truncation);
  double rest = 1.0;
  for (std::size_t k = 0; k + 1 < g.truncation; ++k) {
    const auto s = g.stick(k);
    const double v = s[0] / (s[0] + s[1]);
    w[k] = rest * v;
    rest *= 1.0 - v;
  }
  w[g.truncation - 1] = rest;
  return w;
}

std::vector<double> dp_local_step(const Observation& obs, const DpGlobalState& g, const DpMixSpec& spec) {
  return responsibilities<GaussianComponents>(obs, g, spec);
}

std::vector<double> dp_local_step(const Document& doc, const DpGlobalState& g, const DpMixSpec& spec) {
  return responsibilities<MultinomialComponents>(doc, g, spec);
}

SuffStats dp_suff_stats(const Observation& obs, std::span<const double> r, const DpMixSpec& spec) {
  return suff_stats<GaussianComponents>(obs, r, spec);
}

SuffStats dp_suff_stats(const Document& doc, std::span<const double> r, const DpMixSpec& spec) {
  return suff_stats<MultinomialComponents>(doc, r, spec);
}

double dp_predictive_log_lik(const Observation& obs, const DpGlobalState& g, const DpMixSpec& spec) {
  const FamilyKind& family = spec.component_family();
  GaussianComponents::check(family, obs);
  const std::size_t D = family.dim();
  std::vector<bool> conditioned(D, false);
  for (std::size_t d : spec.conditioned_dims) conditioned[d] = true;

  const auto weights = dp_expected_weights(g);
  std::vector<double> log_w(g.truncation);
  std::vector<double> log_joint(g.truncation);
  for (std::size_t k = 0; k < g.truncation; ++k) {
    const auto e = g.expectation(k);
    double cond = 0.0;
    double target = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double lp = normal_log_pdf(obs[d], e[d], 1.0 / family.precision()[d]);
      (conditioned[d] ? cond : target) += lp;
    }
    log_w[k] = (weights[k] > 0.0 ? std::log(weights[k]) : kNegInf) + cond;
    log_joint[k] = log_w[k] + target;
  }
  return log_sum_exp(log_joint) - log_sum_exp(log_w);
}

PredictiveScore dp_text_predictive(const Document& first, const Document& second, const DpGlobalState& g,
                                   const DpMixSpec& spec) {
  MultinomialComponents::check(spec.component_family(), second);
  const auto r = dp_local_step(first, g, spec);
  std::vector<double> totals(g.truncation);
  for (std::size_t k = 0; k < g.truncation; ++k) {
    const auto c = g.component(k);
    totals[k] = std::accumulate(c.begin(), c.end(), 0.0);
  }
  PredictiveScore score;
  for (const auto& wc : second.words()) {
    double p = 0.0;
    for (std::size_t k = 0; k < g.truncation; ++k) p += r[k] * g.component(k)[wc.id] / totals[k];
    score.log_lik += wc.count * std::log(p);
    score.count += wc.count;
  }
  return score;
}

// ---- component policies ----

void GaussianComponents::check(const FamilyKind& family, const Observation& x) {
  if (x.size() != family.dim()) {
    throw std::invalid_argument("observation has " + std::to_string(x.size()) + " dims, expected " +
                                std::to_string(family.dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("observation has a non-finite coordinate");
  }
}

double GaussianComponents::expected_log_lik(const FamilyKind& family, std::span<const double> e,
                                            const Observation& x) {
  double acc = e[family.dim()];
  for (std::size_t d = 0; d < family.dim(); ++d) {
    const double tau = family.precision()[d];
    acc += 0.5 * std::log(tau / (2.0 * std::numbers::pi)) - 0.5 * tau * x[d] * x[d] + tau * x[d] * e[d];
  }
  return acc;
}

void GaussianComponents::add_stats(const FamilyKind& family, const Observation& x, double weight,
                                   std::span<double> into) {
  for (std::size_t d = 0; d < family.dim(); ++d) into[d] += weight * family.precision()[d] * x[d];
  into[family.dim()] += weight;
}

double GaussianComponents::log_predictive(const FamilyKind& family, std::span<const double> lambda,
                                          const Observation& x) {
  const double n = lambda[family.dim()];
  double acc = 0.0;
  for (std::size_t d = 0; d < family.dim(); ++d) {
    const double tau = family.precision()[d];
    acc += normal_log_pdf(x[d], lambda[d] / (tau * n), 1.0 / tau + 1.0 / (tau * n));
  }
  return acc;
}

void MultinomialComponents::check(const FamilyKind& family, const Document& doc) {
  if (!doc.empty() && doc.max_id() >= family.dim()) {
    throw std::invalid_argument("word id " + std::to_string(doc.max_id()) + " outside vocabulary of size " +
                                std::to_string(family.dim()));
  }
}

double MultinomialComponents::expected_log_lik(const FamilyKind&, std::span<const double> e, const Document& doc) {
  double acc = 0.0;
  for (const auto& wc : doc.words()) acc += wc.count * e[wc.id];
  return acc;
}

void MultinomialComponents::add_stats(const FamilyKind&, const Document& doc, double weight,
                                      std::span<double> into) {
  for (const auto& wc : doc.words()) into[wc.id] += weight * wc.count;
}

double MultinomialComponents::log_predictive(const FamilyKind&, std::span<const double> lambda,
                                             const Document& doc) {
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  double acc = log_gamma(total) - log_gamma(total + static_cast<double>(doc.token_total()));
  for (const auto& wc : doc.words()) acc += log_gamma(lambda[wc.id] + wc.count) - log_gamma(lambda[wc.id]);
  return acc;
}

// ---- engine adapter ----

template <typename C>
DpMixture<C>::DpMixture(DpMixSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.component_family().tag() != C::kFamily) {
    throw std::invalid_argument("component prior family does not match the mixture's observation type");
  }
  layout_ = dp_layout(spec_);
  prior_.reserve(layout_.size());
  for (std::size_t k = 0; k + 1 < spec_.truncation; ++k) {
    prior_.push_back(1.0);
    prior_.push_back(spec_.stick_eta);
  }
  for (std::size_t k = 0; k < spec_.truncation; ++k) {
    prior_.insert(prior_.end(), spec_.component_prior.values.begin(), spec_.component_prior.values.end());
  }
}

template <typename C>
DpGlobalState DpMixture<C>::init_global(std::uint64_t) const {
  return global_from(prior_);
}

template <typename C>
DpGlobalState DpMixture<C>::global_from(std::vector<double> lambda) const {
  return make_dp_global(spec_, std::move(lambda));
}

template <typename C>
DpGlobalState DpMixture<C>::seed_from_sample(std::span<const Datum> sample) const {
  const FamilyKind& family = spec_.component_family();
  const auto& base = spec_.component_prior.values;
  const std::size_t block = base.size();

  struct Cluster {
    std::vector<double> lambda;
    double count = 0.0;
  };
  std::vector<Cluster> clusters;
  const double log_new = std::log(spec_.stick_eta);
  for (const auto& x : sample) {
    C::check(family, x);
    double best = kNegInf;
    std::size_t pick = clusters.size();
    if (clusters.size() < spec_.truncation) best = log_new + C::log_predictive(family, base, x);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const double s = std::log(clusters[k].count) + C::log_predictive(family, clusters[k].lambda, x);
      if (s > best) {
        best = s;
        pick = k;
      }
    }
    if (pick == clusters.size()) clusters.push_back({base, 0.0});
    C::add_stats(family, x, 1.0, clusters[pick].lambda);
    clusters[pick].count += 1.0;
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& a, const Cluster& b) { return a.count > b.count; });

  std::vector<double> lambda = prior_;
  double tail = 0.0;
  for (const auto& c : clusters) tail += c.count;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    tail -= clusters[k].count;
    if (k + 1 < spec_.truncation) {
      lambda[2 * k] = 1.0 + clusters[k].count;
      lambda[2 * k + 1] = spec_.stick_eta + tail;
    }
    std::copy(clusters[k].lambda.begin(), clusters[k].lambda.end(),
              lambda.begin() + static_cast<std::ptrdiff_t>(component_offset(spec_.truncation) + k * block));
  }
  return global_from(std::move(lambda));
}

template <typename C>
void DpMixture<C>::validate_datum(const Datum& x) const {
  C::check(spec_.component_family(), x);
}

template <typename C>
void DpMixture<C>::add_stats(const Datum& x, const Local& r, std::span<double> into) const {
  const std::size_t T = spec_.truncation;
  double tail = 0.0;
  for (std::size_t k = T; k-- > 1;) {
    tail += r[k];
    into[2 * (k - 1)] += r[k - 1];
    into[2 * (k - 1) + 1] += tail;
  }
  const std::size_t block = spec_.component_family().coordinate_count();
  for (std::size_t k = 0; k < T; ++k) {
    C::add_stats(spec_.component_family(), x, r[k], into.subspan(component_offset(T) + k * block, block));
  }
}

template <typename C>
double DpMixture<C>::local_elbo(const Datum& x, const Local& r, const Global& e) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < spec_.truncation; ++k) {
    if (r[k] <= 0.0) continue;
    acc += r[k] * (e.elog_pi[k] + C::expected_log_lik(spec_.component_family(), e.expectation(k), x) - std::log(r[k]));
  }
  return acc;
}

template <typename C>
double DpMixture<C>::global_kl(const Global& g) const {
  const std::vector<double> stick_prior{1.0, spec_.stick_eta};
  double kl = 0.0;
  for (std::size_t k = 0; k + 1 < spec_.truncation; ++k) kl += kl_divergence(FamilyKind::beta(), g.stick(k), stick_prior);
  for (std::size_t k = 0; k < spec_.truncation; ++k) {
    kl += kl_divergence(spec_.component_family(), g.component(k), spec_.component_prior.values);
  }
  return kl;
}

template <typename C>
DpGlobalState DpMixture<C>::monte_carlo_expectations(const Global& g, int draws, std::mt19937_64& rng) const {
  if (draws < 1) throw std::invalid_argument("Monte-Carlo draw count must be positive");
  Global out = g;
  const std::size_t T = spec_.truncation;
  std::vector<double> stick_stats(2 * (T - 1), 0.0);
  std::vector<double> pair(2);
  for (std::size_t k = 0; k + 1 < T; ++k) {
    for (int s = 0; s < draws; ++s) {
      sample_statistic(FamilyKind::beta(), g.stick(k), rng, pair);
      stick_stats[2 * k] += pair[0] / draws;
      stick_stats[2 * k + 1] += pair[1] / draws;
    }
  }
  out.elog_pi = compose_elog_pi(stick_stats, T);

  const std::size_t block = g.block_size;
  std::vector<double> draw(block);
  for (std::size_t k = 0; k < T; ++k) {
    auto e = std::span<double>(out.component_expectations).subspan(k * block, block);
    std::fill(e.begin(), e.end(), 0.0);
    for (int s = 0; s < draws; ++s) {
      sample_statistic(spec_.component_family(), g.component(k), rng, draw);
      for (std::size_t i = 0; i < block; ++i) e[i] += draw[i] / draws;
    }
  }
  return out;
}

template class DpMixture<GaussianComponents>;
template class DpMixture<MultinomialComponents>;

}  // namespace popvb
