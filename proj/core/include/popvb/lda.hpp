#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "popvb/document.hpp"
#include "popvb/expfam.hpp"
#include "popvb/score.hpp"

namespace popvb {

struct LdaSpec {
  std::size_t num_topics = 100;
  std::size_t vocab_size = 0;
  // Symmetric Dirichlet prior on each topic.
  double eta = 0.01;
  // Symmetric Dirichlet prior on each document's topic proportions.
  double gamma_doc = 0.1;
  double local_tol = 1e-4;
  int local_max_iters = 100;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Topic Dirichlets, row-major num_topics x vocab_size, with E[log beta] cached.
struct LdaGlobalState {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  std::vector<double> lambda;
  std::vector<double> elog_beta;
  // Row sums of lambda.
  std::vector<double> topic_totals;

  std::span<const double> topic(std::size_t k) const {
    return std::span<const double>(lambda).subspan(k * vocab_size, vocab_size);
  }
};

struct LdaLocalState {
  std::vector<double> gamma;
  // One row of num_topics responsibilities per distinct word of the document.
  std::vector<double> phi;
  int sweeps = 0;
  bool converged = false;
};

// Recomputes elog_beta and topic_totals from lambda. Throws std::domain_error on a nonpositive entry.
void refresh_expectations(LdaGlobalState& global);
LdaGlobalState make_lda_global(std::size_t num_topics, std::size_t vocab_size, std::vector<double> lambda);

// Coordinate ascent on (gamma_d, phi_d) against fixed topics.
LdaLocalState lda_local_step(const Document& doc, const LdaGlobalState& global, const LdaSpec& spec);

// Per-document ELBO: E[log p(theta)] - E[log q(theta)]
//   + sum_w count_w sum_k phi_wk (E[log theta_k] + elog_beta_kw - log phi_wk).
// `elog_beta` may differ from global.elog_beta (Monte-Carlo estimates).
double lda_document_elbo(const Document& doc, const LdaLocalState& local, std::span<const double> elog_beta,
                         std::size_t vocab_size, const LdaSpec& spec);

Layout lda_layout(std::size_t num_topics, std::size_t vocab_size);
SuffStats lda_suff_stats(const Document& doc, const LdaLocalState& local, std::size_t num_topics,
                         std::size_t vocab_size);

// Log predictive probability of the tokens of `second` after fitting the
// document's topic proportions to `first`. Uses variational posterior means.
PredictiveScore lda_predictive(const Document& first, const Document& second, const LdaGlobalState& global,
                               const LdaSpec& spec);
double lda_predictive_log_lik(const Document& first, const Document& second, const LdaGlobalState& global,
                              const LdaSpec& spec);

// Engine adapter.
class LdaModel {
 public:
  using Datum = Document;
  using Global = LdaGlobalState;
  using Local = LdaLocalState;

  explicit LdaModel(LdaSpec spec);

  const LdaSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }
  const std::vector<double>& prior() const { return prior_; }

  // Prior pseudo-counts plus U(0, jitter) noise.
  Global init_global(std::uint64_t seed, double jitter = 0.1) const;
  Global global_from(std::vector<double> lambda) const;

  static std::span<double> params(Global& g) { return g.lambda; }
  static std::span<const double> params(const Global& g) { return g.lambda; }
  void refresh(Global& g) const { refresh_expectations(g); }

  void validate_datum(const Datum& doc) const;
  Local local_step(const Datum& doc, const Global& g) const { return lda_local_step(doc, g, spec_); }
  bool converged(const Local& local) const { return local.converged; }
  // into[k * V + w] += count_w * phi_wk
  void add_stats(const Datum& doc, const Local& local, std::span<double> into) const;
  double local_elbo(const Datum& doc, const Local& local, const Global& expectations) const;
  double global_kl(const Global& g) const;
  Global monte_carlo_expectations(const Global& g, int draws, std::mt19937_64& rng) const;

 private:
  LdaSpec spec_;
  Layout layout_;
  std::vector<double> prior_;
};

}  // namespace popvb
