#include "popvb/lda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "popvb/special.hpp"

namespace popvb {

namespace {

void expected_log_dirichlet(std::span<const double> params, std::span<double> out) {
  const double psi_total = digamma(std::accumulate(params.begin(), params.end(), 0.0));
  for (std::size_t k = 0; k < params.size(); ++k) out[k] = digamma(params[k]) - psi_total;
}

void check_doc(const Document& doc, std::size_t vocab_size) {
  if (!doc.empty() && doc.max_id() >= vocab_size) {
    throw std::invalid_argument("word id " + std::to_string(doc.max_id()) + " outside vocabulary of size " +
                                std::to_string(vocab_size));
  }
}

}  // namespace

void LdaSpec::validate() const {
  if (num_topics < 1) throw std::invalid_argument("K must be at least 1");
  if (vocab_size < 1) throw std::invalid_argument("V must be at least 1");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(gamma_doc > 0.0)) throw std::invalid_argument("gamma_doc must be positive");
  if (!(local_tol > 0.0)) throw std::invalid_argument("local_tol must be positive");
  if (local_max_iters < 1) throw std::invalid_argument("local_max_iters must be positive");
}

void refresh_expectations(LdaGlobalState& g) {
  if (g.lambda.size() != g.num_topics * g.vocab_size) {
    throw std::invalid_argument("lambda size does not match K x V");
  }
  g.elog_beta.resize(g.lambda.size());
  g.topic_totals.resize(g.num_topics);
  for (std::size_t k = 0; k < g.num_topics; ++k) {
    auto row = std::span<const double>(g.lambda).subspan(k * g.vocab_size, g.vocab_size);
    for (double v : row) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error("topic " + std::to_string(k) + " has a non-positive or non-finite entry");
      }
    }
    g.topic_totals[k] = std::accumulate(row.begin(), row.end(), 0.0);
    expected_log_dirichlet(row, std::span<double>(g.elog_beta).subspan(k * g.vocab_size, g.vocab_size));
  }
}

LdaGlobalState make_lda_global(std::size_t num_topics, std::size_t vocab_size, std::vector<double> lambda) {
  LdaGlobalState g;
  g.num_topics = num_topics;
  g.vocab_size = vocab_size;
  g.lambda = std::move(lambda);
  refresh_expectations(g);
  return g;
}

LdaLocalState lda_local_step(const Document& doc, const LdaGlobalState& global, const LdaSpec& spec) {
  check_doc(doc, global.vocab_size);
  const std::size_t K = global.num_topics;
  const std::size_t V = global.vocab_size;
  const auto words = doc.words();

  LdaLocalState local;
  local.gamma.assign(K, spec.gamma_doc + static_cast<double>(doc.token_total()) / static_cast<double>(K));
  local.phi.assign(words.size() * K, 0.0);

  std::vector<double> elog_theta(K);
  std::vector<double> next(K);
  for (int sweep = 1; sweep <= spec.local_max_iters; ++sweep) {
    expected_log_dirichlet(local.gamma, elog_theta);
    std::fill(next.begin(), next.end(), spec.gamma_doc);
    for (std::size_t i = 0; i < words.size(); ++i) {
      double* row = &local.phi[i * K];
      const std::size_t w = words[i].id;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        row[k] = elog_theta[k] + global.elog_beta[k * V + w];
        top = std::max(top, row[k]);
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        row[k] = std::exp(row[k] - top);
        norm += row[k];
      }
      const double count = words[i].count;
      for (std::size_t k = 0; k < K; ++k) {
        row[k] /= norm;
        next[k] += count * row[k];
      }
    }
    double change = 0.0;
    for (std::size_t k = 0; k < K; ++k) change += std::abs(next[k] - local.gamma[k]);
    change /= static_cast<double>(K);
    local.gamma.swap(next);
    local.sweeps = sweep;
    if (change < spec.local_tol) {
      local.converged = true;
      break;
    }
  }
  return local;
}

double lda_document_elbo(const Document& doc, const LdaLocalState& local, std::span<const double> elog_beta,
                         std::size_t vocab_size, const LdaSpec& spec) {
  const std::size_t K = local.gamma.size();
  const auto words = doc.words();
  if (local.phi.size() != words.size() * K) throw std::invalid_argument("local state does not match document");

  std::vector<double> elog_theta(K);
  expected_log_dirichlet(local.gamma, elog_theta);
  const std::vector<double> prior(K, spec.gamma_doc);
  double elbo = -kl_divergence(FamilyKind::dirichlet(K), local.gamma, prior);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::size_t w = words[i].id;
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double p = local.phi[i * K + k];
      if (p > 0.0) acc += p * (elog_theta[k] + elog_beta[k * vocab_size + w] - std::log(p));
    }
    elbo += words[i].count * acc;
  }
  return elbo;
}

Layout lda_layout(std::size_t num_topics, std::size_t vocab_size) {
  return Layout(std::vector<FamilyKind>(num_topics, FamilyKind::dirichlet(vocab_size)));
}

SuffStats lda_suff_stats(const Document& doc, const LdaLocalState& local, std::size_t num_topics,
                         std::size_t vocab_size) {
  if (local.phi.size() != doc.distinct() * num_topics) {
    throw std::invalid_argument("phi rows do not match the document's words");
  }
  check_doc(doc, vocab_size);
  SuffStats s = SuffStats::zeros(lda_layout(num_topics, vocab_size));
  const auto words = doc.words();
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t k = 0; k < num_topics; ++k) {
      s.values[k * vocab_size + words[i].id] += words[i].count * local.phi[i * num_topics + k];
    }
  }
  s.weight = 1.0;
  return s;
}

PredictiveScore lda_predictive(const Document& first, const Document& second, const LdaGlobalState& global,
                               const LdaSpec& spec) {
  check_doc(second, global.vocab_size);
  const auto local = lda_local_step(first, global, spec);
  const std::size_t K = global.num_topics;
  const std::size_t V = global.vocab_size;
  const double gamma_total = std::accumulate(local.gamma.begin(), local.gamma.end(), 0.0);

  PredictiveScore score;
  for (const auto& wc : second.words()) {
    double p = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      p += (local.gamma[k] / gamma_total) * (global.lambda[k * V + wc.id] / global.topic_totals[k]);
    }
    score.log_lik += wc.count * std::log(p);
    score.count += wc.count;
  }
  return score;
}

double lda_predictive_log_lik(const Document& first, const Document& second, const LdaGlobalState& global,
                              const LdaSpec& spec) {
  if (first.empty() || second.empty()) throw std::invalid_argument("split-half scoring needs two nonempty halves");
  return lda_predictive(first, second, global, spec).average();
}

LdaModel::LdaModel(LdaSpec spec) : spec_(spec) {
  spec_.validate();
  layout_ = lda_layout(spec_.num_topics, spec_.vocab_size);
  prior_.assign(layout_.size(), spec_.eta);
}

LdaGlobalState LdaModel::init_global(std::uint64_t seed, double jitter) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, jitter);
  std::vector<double> lambda = prior_;
  if (jitter > 0.0) {
    for (double& v : lambda) v += noise(rng);
  }
  return global_from(std::move(lambda));
}

LdaGlobalState LdaModel::global_from(std::vector<double> lambda) const {
  return make_lda_global(spec_.num_topics, spec_.vocab_size, std::move(lambda));
}

void LdaModel::validate_datum(const Document& doc) const { check_doc(doc, spec_.vocab_size); }

void LdaModel::add_stats(const Document& doc, const LdaLocalState& local, std::span<double> into) const {
  const std::size_t K = spec_.num_topics;
  const std::size_t V = spec_.vocab_size;
  const auto words = doc.words();
  if (local.phi.size() != words.size() * K) throw std::invalid_argument("phi rows do not match the document's words");
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) into[k * V + words[i].id] += words[i].count * local.phi[i * K + k];
  }
}

double LdaModel::local_elbo(const Document& doc, const LdaLocalState& local, const LdaGlobalState& e) const {
  return lda_document_elbo(doc, local, e.elog_beta, spec_.vocab_size, spec_);
}

double LdaModel::global_kl(const LdaGlobalState& g) const {
  const auto family = FamilyKind::dirichlet(spec_.vocab_size);
  const auto prior = std::span<const double>(prior_).first(spec_.vocab_size);
  double kl = 0.0;
  for (std::size_t k = 0; k < spec_.num_topics; ++k) kl += kl_divergence(family, g.topic(k), prior);
  return kl;
}

LdaGlobalState LdaModel::monte_carlo_expectations(const LdaGlobalState& g, int draws, std::mt19937_64& rng) const {
  if (draws < 1) throw std::invalid_argument("Monte-Carlo draw count must be positive");
  LdaGlobalState out = g;
  const std::size_t V = spec_.vocab_size;
  const auto family = FamilyKind::dirichlet(V);
  std::vector<double> draw(V);
  for (std::size_t k = 0; k < spec_.num_topics; ++k) {
    auto row = std::span<double>(out.elog_beta).subspan(k * V, V);
    std::fill(row.begin(), row.end(), 0.0);
    for (int s = 0; s < draws; ++s) {
      sample_statistic(family, g.topic(k), rng, draw);
      for (std::size_t w = 0; w < V; ++w) row[w] += draw[w];
    }
    for (double& v : row) v /= draws;
  }
  return out;
}

}  // namespace popvb
