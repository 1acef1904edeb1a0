#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "popvb/dpmix.hpp"
#include "popvb/engine.hpp"
#include "popvb/lda.hpp"

using namespace popvb;

namespace {

DpGaussianMixture conjugate_model(double tau = 1.0) {
  DpMixSpec s;
  s.truncation = 1;
  const std::vector<double> mean{0.0};
  s.component_prior = gaussian_component_prior(mean, 1.0, {tau});
  return DpGaussianMixture(s);
}

LdaModel toy_lda() {
  LdaSpec s;
  s.num_topics = 2;
  s.vocab_size = 3;
  return LdaModel(s);
}

std::vector<Document> toy_docs() {
  return {Document::from_counts({{0, 2}, {1, 1}}), Document::from_counts({{1, 1}, {2, 3}})};
}

SuffStats stats_of(std::size_t n, std::vector<double> values, double weight) {
  SuffStats s = SuffStats::zeros(Layout({FamilyKind::dirichlet(n)}));
  s.values = std::move(values);
  s.weight = weight;
  return s;
}

}  // namespace

TEST_CASE("natural_gradient") {
  const std::vector<double> zeta{0.01, 0.01, 0.01};
  const std::vector<double> lambda{1.0, 2.0, 3.0};
  const auto s = stats_of(3, {0.5, 1.0, 0.0}, 2.0);
  const auto g = natural_gradient(zeta, lambda, s, 10.0, 2);
  CHECK(g[0] == doctest::Approx(0.01 - 1.0 + 5.0 * 0.5));
  CHECK(g[1] == doctest::Approx(0.01 - 2.0 + 5.0 * 1.0));
  CHECK(g[2] == doctest::Approx(0.01 - 3.0));

  std::vector<double> fixed(3);
  for (std::size_t i = 0; i < 3; ++i) fixed[i] = zeta[i] + 5.0 * s.values[i];
  for (double v : natural_gradient(zeta, fixed, s, 10.0, 2)) CHECK(v == doctest::Approx(0.0));

  const auto zero = stats_of(3, {0.0, 0.0, 0.0}, 2.0);
  const auto pull = natural_gradient(zeta, lambda, zero, 10.0, 2);
  for (std::size_t i = 0; i < 3; ++i) CHECK(pull[i] == zeta[i] - lambda[i]);

  CHECK_THROWS_AS(natural_gradient(zeta, lambda, s, 10.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(natural_gradient(zeta, lambda, s, 10.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(natural_gradient(zeta, std::vector<double>{1.0, 2.0}, s, 10.0, 2), std::invalid_argument);
}

TEST_CASE("OptimizerConfig validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.learning_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("popvb_step with zero learning rate only advances counters") {
  const auto model = toy_lda();
  EngineState<LdaModel> state{model.init_global(3), 0, 0, {}};
  const auto before = state.global.lambda;
  OptimizerConfig c;
  c.learning_rate = 0.0;
  c.alpha = 10.0;
  const auto docs = toy_docs();
  popvb_step<LdaModel>(state, docs, c, model);
  CHECK(state.global.lambda == before);
  CHECK(state.iteration == 1);
  CHECK(state.data_seen == 2);

  popvb_step<LdaModel>(state, std::span<const Document>(), c, model);
  CHECK(state.iteration == 1);
}

TEST_CASE("popvb_step leaves a fixed point unchanged") {
  const auto model = conjugate_model(1.5);
  const std::vector<Observation> batch{{0.3}, {-1.2}, {2.5}, {0.9}};
  const double alpha = 37.0;
  std::vector<double> lambda = model.prior();
  for (const auto& x : batch) {
    lambda[0] += alpha / 4.0 * 1.5 * x[0];
    lambda[1] += alpha / 4.0;
  }
  for (double rho : {0.05, 0.5, 1.0}) {
    EngineState<DpGaussianMixture> state{model.global_from(lambda), 0, 0, {}};
    OptimizerConfig c;
    c.alpha = alpha;
    c.learning_rate = rho;
    popvb_step<DpGaussianMixture>(state, batch, c, model);
    for (std::size_t i = 0; i < lambda.size(); ++i) CHECK(std::abs(state.global.lambda[i] - lambda[i]) < 1e-12);
  }
}

TEST_CASE("popvb_step on a two-document corpus") {
  const auto model = toy_lda();
  const auto docs = toy_docs();
  EngineState<LdaModel> state{model.init_global(5), 0, 0, {}};
  const auto start = state.global;
  OptimizerConfig c;
  c.alpha = 10.0;
  c.learning_rate = 0.3;
  popvb_step<LdaModel>(state, docs, c, model);

  std::vector<double> expected = start.lambda;
  std::vector<double> stats(6, 0.0);
  for (const auto& d : docs) {
    const auto local = lda_local_step(d, start, model.spec());
    const auto s = lda_suff_stats(d, local, 2, 3);
    for (std::size_t i = 0; i < 6; ++i) stats[i] += s.values[i];
  }
  for (std::size_t i = 0; i < 6; ++i) {
    expected[i] += 0.3 * (0.01 - start.lambda[i] + 10.0 / 2.0 * stats[i]);
    CHECK(state.global.lambda[i] == doctest::Approx(expected[i]).epsilon(1e-14));
  }
}

TEST_CASE("parallel local steps match the sequential reduction") {
  LdaSpec spec;
  spec.num_topics = 4;
  spec.vocab_size = 30;
  const LdaModel model(spec);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint32_t> word(0, 29);
  std::vector<Document> docs;
  for (int d = 0; d < 40; ++d) {
    std::vector<WordCount> wc;
    for (std::uint32_t w = 0; w < 30; ++w) {
      if (word(rng) < 6) wc.push_back({w, 1 + word(rng) % 4});
    }
    docs.push_back(Document::from_counts(wc));
  }
  const auto g = model.init_global(1);
  const auto one = compute_batch_stats(model, g, std::span<const Document>(docs), 1);
  const auto four = compute_batch_stats(model, g, std::span<const Document>(docs), 4);
  for (std::size_t i = 0; i < one.stats.values.size(); ++i) {
    CHECK(std::abs(one.stats.values[i] - four.stats.values[i]) < 1e-12 * std::max(1.0, one.stats.values[i]));
  }
  CHECK(one.stats.weight == four.stats.weight);
}

TEST_CASE("svi_run") {
  const auto model = toy_lda();
  const auto docs = toy_docs();
  OptimizerConfig c;
  c.algorithm = Algorithm::kSVI;
  c.alpha = 2.0;
  c.batch_size = 2;
  c.learning_rate = 1.0;
  c.seed = 4;
  const auto initial = EngineState<LdaModel>{model.init_global(1), 0, 0, {}};
  const auto traj = svi_run<LdaModel>(docs, c, model, initial, 1);
  REQUIRE(traj.size() == 1);

  // Replay the resampled batch: with B = N and rho = 1 the step is the batch coordinate update.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, 1);
  std::vector<double> expected(6, 0.01);
  for (int b = 0; b < 2; ++b) {
    const auto& d = docs[pick(rng)];
    const auto s = lda_suff_stats(d, lda_local_step(d, initial.global, model.spec()), 2, 3);
    for (std::size_t i = 0; i < 6; ++i) expected[i] += s.values[i];
  }
  for (std::size_t i = 0; i < 6; ++i) CHECK(traj[0].global.lambda[i] == doctest::Approx(expected[i]).epsilon(1e-14));

  c.alpha = 3.0;
  CHECK_THROWS_AS(svi_run<LdaModel>(docs, c, model, initial, 1), ConfigError);
  c.alpha = 2.0;
  c.algorithm = Algorithm::kPopVB;
  CHECK_THROWS_AS(svi_run<LdaModel>(docs, c, model, initial, 1), ConfigError);
  c.algorithm = Algorithm::kSVI;
  CHECK_THROWS_AS(svi_run<LdaModel>(std::span<const Document>(), c, model, initial, 1), std::invalid_argument);
}

TEST_CASE("svb_step") {
  const auto model = conjugate_model(2.0);
  auto state = prior_state(model);
  svb_step<DpGaussianMixture>(state, std::span<const Observation>(), model);
  CHECK(state.global.lambda == model.prior());
  CHECK(state.iteration == 0);

  std::vector<Observation> data;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(1.0, 2.0);
  for (int i = 0; i < 100; ++i) data.push_back({n(rng)});
  std::vector<double> expected = model.prior();
  for (const auto& x : data) {
    expected[0] += 2.0 * x[0];
    expected[1] += 1.0;
  }
  for (std::size_t b = 0; b < data.size(); b += 7) {
    const auto end = std::min(data.size(), b + 7);
    svb_step<DpGaussianMixture>(state, std::span<const Observation>(data.data() + b, end - b), model);
  }
  CHECK(state.global.lambda[0] == doctest::Approx(expected[0]).epsilon(1e-13));
  CHECK(state.global.lambda[1] == expected[1]);
  CHECK(state.data_seen == 100);

  const auto lda = toy_lda();
  auto ls = prior_state(lda);
  const auto docs = toy_docs();
  const auto snapshot = ls.global;
  svb_step<LdaModel>(ls, docs, lda);
  for (std::size_t i = 0; i < 6; ++i) {
    double e = 0.01;
    for (const auto& d : docs) e += lda_suff_stats(d, lda_local_step(d, snapshot, lda.spec()), 2, 3).values[i];
    CHECK(ls.global.lambda[i] == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("non-finite parameters raise NumericError") {
  const auto model = conjugate_model();
  auto state = prior_state(model);
  OptimizerConfig c;
  c.alpha = 1e308;
  c.learning_rate = 1.0;
  const std::vector<Observation> batch{{10.0}};
  CHECK_THROWS_AS(popvb_step<DpGaussianMixture>(state, batch, c, model), NumericError);
}

TEST_CASE("estimate_felbo") {
  const auto model = toy_lda();
  const auto prior = prior_state(model);
  const auto docs = toy_docs();
  CHECK(estimate_felbo(model, prior.global, std::span<const Document>(docs), 0.0) == doctest::Approx(0.0));

  const auto g = model.init_global(9);
  auto doubled = docs;
  doubled.insert(doubled.end(), docs.begin(), docs.end());
  CHECK(estimate_felbo(model, g, std::span<const Document>(docs), 50.0) ==
        doctest::Approx(estimate_felbo(model, g, std::span<const Document>(doubled), 50.0)).epsilon(1e-13));

  // One Gaussian datum, single component: every term in closed form.
  const auto gm = conjugate_model(1.0);
  const double m = 0.7;
  const double n = 3.0;
  const auto q = gm.global_from({m * n, n});
  const double v = 1.0 / n;
  const double x = 1.9;
  const double alpha = 4.0;
  const double kl = 0.5 * (v + m * m - 1.0 - std::log(v));
  const double expected_ll = -0.5 * std::log(2.0 * M_PI) - 0.5 * ((x - m) * (x - m) + v);
  const std::vector<Observation> one{{x}};
  CHECK(estimate_felbo(gm, q, std::span<const Observation>(one), alpha) ==
        doctest::Approx(-kl + alpha * expected_ll).epsilon(1e-12));

  // Monte-Carlo cross terms converge to the closed form.
  const double mc = estimate_felbo(gm, q, std::span<const Observation>(one), alpha, 200000, 1);
  CHECK(mc == doctest::Approx(-kl + alpha * expected_ll).epsilon(1e-2));
}
