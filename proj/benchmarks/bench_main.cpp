#include <benchmark/benchmark.h>

#include "popvb/dpmix.hpp"
#include "popvb/engine.hpp"
#include "popvb/lda.hpp"
#include "popvb/special.hpp"
#include "popvb/stream.hpp"

using namespace popvb;

namespace {

struct LdaFixture {
  LdaSpec spec;
  LdaModel model;
  std::vector<Document> docs;

  LdaFixture(std::size_t K, std::size_t V) : spec{make_spec(K, V)}, model(spec) {
    auto stream = synthesize_stream(LdaGenerator::random(K, V, 0.1, 0.5, 100.0, 1), 2);
    docs = stream.next_minibatch(256);
  }

  static LdaSpec make_spec(std::size_t K, std::size_t V) {
    LdaSpec s;
    s.num_topics = K;
    s.vocab_size = V;
    return s;
  }
};

void BM_Digamma(benchmark::State& state) {
  double x = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(digamma(x));
    x += 1e-3;
  }
}
BENCHMARK(BM_Digamma);

void BM_LdaLocalStep(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  LdaFixture f(K, 2000);
  const auto global = f.model.init_global(3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lda_local_step(f.docs[i++ % f.docs.size()], global, f.spec));
  }
}
BENCHMARK(BM_LdaLocalStep)->Arg(10)->Arg(50)->Arg(100);

void BM_LdaPopvbStep(benchmark::State& state) {
  LdaFixture f(20, 2000);
  OptimizerConfig c;
  c.alpha = 1e5;
  c.batch_size = 64;
  c.learning_rate = 0.05;
  c.workers = static_cast<std::size_t>(state.range(0));
  EngineState<LdaModel> s{f.model.init_global(4), 0, 0, {}};
  const std::span<const Document> batch(f.docs.data(), 64);
  for (auto _ : state) popvb_step<LdaModel>(s, batch, c, f.model);
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_LdaPopvbStep)->Arg(1)->Arg(4)->UseRealTime();

void BM_DpGaussianStep(benchmark::State& state) {
  DpMixSpec spec;
  spec.truncation = static_cast<std::size_t>(state.range(0));
  const std::vector<double> zero{0.0, 0.0};
  spec.component_prior = gaussian_component_prior(zero, 0.01, {1.0, 1.0});
  const DpGaussianMixture model(spec);
  GaussianMixtureGenerator truth{{0.5, 0.5}, {-3.0, 0.0, 3.0, 0.0}, {1.0, 1.0}};
  auto stream = synthesize_stream(truth, 5);
  EngineState<DpGaussianMixture> s{model.seed_from_sample(stream.heldout_window(500)), 0, 0, {}};
  OptimizerConfig c;
  c.alpha = 1e4;
  c.batch_size = 100;
  c.learning_rate = 0.05;
  const auto batch = stream.next_minibatch(100);
  for (auto _ : state) popvb_step<DpGaussianMixture>(s, batch, c, model);
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_DpGaussianStep)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
