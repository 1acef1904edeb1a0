#pragma once

// Stochastic natural-gradient optimisation of the population objective.
//
// For a minibatch x_1..x_B drawn from the stream, each point's local
// variational parameters are optimised against the current global snapshot,
// their expected sufficient statistics S are summed, and
//   g = zeta - lambda + (alpha / B) S,     lambda <- lambda + rho g.
// Only the statistics are rescaled by alpha / B. With alpha = N and an
// empirical resampler this is SVI. SVB instead accumulates
// lambda <- lambda + S starting from lambda = zeta.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "popvb/errors.hpp"
#include "popvb/expfam.hpp"
#include "popvb/stream.hpp"

namespace popvb {

enum class Algorithm { kPopVB, kSVI, kSVB };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

// Lower bound applied to Dirichlet/Beta coordinates and NormalMean counts after each update.
inline constexpr double kPositivityFloor = 1e-8;

struct OptimizerConfig {
  double alpha = 1e4;
  std::size_t batch_size = 100;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kPopVB;
  // Threads used for minibatch local steps.
  std::size_t workers = 1;

  // Throws ConfigError.
  void validate() const;
};

template <typename M>
concept VariationalModel = requires(const M& m, typename M::Global& g, const typename M::Global& cg,
                                    const typename M::Datum& x, const typename M::Local& l, std::span<double> out,
                                    std::mt19937_64& rng) {
  { m.layout() } -> std::convertible_to<const Layout&>;
  { m.prior() } -> std::convertible_to<const std::vector<double>&>;
  { M::params(g) } -> std::same_as<std::span<double>>;
  { M::params(cg) } -> std::same_as<std::span<const double>>;
  { m.global_from(std::vector<double>()) } -> std::same_as<typename M::Global>;
  m.refresh(g);
  m.validate_datum(x);
  { m.local_step(x, cg) } -> std::same_as<typename M::Local>;
  { m.converged(l) } -> std::same_as<bool>;
  m.add_stats(x, l, out);
  { m.local_elbo(x, l, cg) } -> std::convertible_to<double>;
  { m.global_kl(cg) } -> std::convertible_to<double>;
  { m.monte_carlo_expectations(cg, 1, rng) } -> std::same_as<typename M::Global>;
};

struct Diagnostics {
  double last_gradient_norm = 0.0;
  std::uint64_t local_nonconverged = 0;
  std::uint64_t floor_clamps = 0;
};

template <VariationalModel M>
struct EngineState {
  typename M::Global global;
  std::uint64_t iteration = 0;
  std::uint64_t data_seen = 0;
  Diagnostics diagnostics;
};

// zeta - lambda + (alpha / B) * stats, coordinate-wise over every block.
std::vector<double> natural_gradient(std::span<const double> zeta, std::span<const double> lambda,
                                     const SuffStats& batch_stats, double alpha, std::size_t batch_size);

struct BatchStats {
  SuffStats stats;
  std::uint64_t nonconverged = 0;
};

// Local steps against an immutable snapshot, reduced in data order per worker
// chunk and then in worker order.
template <VariationalModel M>
BatchStats compute_batch_stats(const M& model, const typename M::Global& global,
                               std::span<const typename M::Datum> batch, std::size_t workers = 1) {
  BatchStats out{SuffStats::zeros(model.layout()), 0};
  out.stats.weight = static_cast<double>(batch.size());
  if (batch.empty()) return out;
  for (const auto& x : batch) model.validate_datum(x);

  workers = std::max<std::size_t>(1, std::min(workers, batch.size()));
  if (workers == 1) {
    for (const auto& x : batch) {
      const auto local = model.local_step(x, global);
      if (!model.converged(local)) ++out.nonconverged;
      model.add_stats(x, local, out.stats.values);
    }
    return out;
  }

  std::vector<std::vector<double>> partial(workers, std::vector<double>(out.stats.values.size(), 0.0));
  std::vector<std::uint64_t> misses(workers, 0);
  {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (batch.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(batch.size(), w * chunk);
      const std::size_t end = std::min(batch.size(), begin + chunk);
      threads.emplace_back([&, w, begin, end] {
        for (std::size_t i = begin; i < end; ++i) {
          const auto local = model.local_step(batch[i], global);
          if (!model.converged(local)) ++misses[w];
          model.add_stats(batch[i], local, partial[w]);
        }
      });
    }
  }
  for (std::size_t w = 0; w < workers; ++w) {
    for (std::size_t i = 0; i < partial[w].size(); ++i) out.stats.values[i] += partial[w][i];
    out.nonconverged += misses[w];
  }
  return out;
}

namespace detail {

template <VariationalModel M>
void finish_update(const M& model, EngineState<M>& state, std::size_t batch_size, std::uint64_t nonconverged) {
  auto lambda = M::params(state.global);
  state.diagnostics.floor_clamps += enforce_floor(model.layout(), lambda, kPositivityFloor);
  for (double v : lambda) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite global parameter at iteration " + std::to_string(state.iteration + 1));
    }
  }
  model.refresh(state.global);
  state.diagnostics.local_nonconverged += nonconverged;
  state.iteration += 1;
  state.data_seen += batch_size;
}

}  // namespace detail

// One population-VB step. An empty minibatch leaves the state untouched; a
// short final batch is rescaled by alpha / |batch|.
template <VariationalModel M>
void popvb_step(EngineState<M>& state, std::span<const typename M::Datum> batch, const OptimizerConfig& config,
                const M& model) {
  if (batch.empty()) return;
  if (!(config.learning_rate >= 0.0 && config.learning_rate <= 1.0)) {
    throw std::invalid_argument("learning rate must lie in [0, 1]");
  }
  const auto bs = compute_batch_stats(model, state.global, batch, config.workers);
  const auto grad = natural_gradient(model.prior(), M::params(state.global), bs.stats, config.alpha, batch.size());
  auto lambda = M::params(state.global);
  double norm = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    lambda[i] += config.learning_rate * grad[i];
    norm += grad[i] * grad[i];
  }
  state.diagnostics.last_gradient_norm = std::sqrt(norm);
  detail::finish_update(model, state, batch.size(), bs.nonconverged);
}

// Streaming variational Bayes: lambda <- lambda + S, no rate, no alpha.
template <VariationalModel M>
void svb_step(EngineState<M>& state, std::span<const typename M::Datum> batch, const M& model,
              std::size_t workers = 1) {
  if (batch.empty()) return;
  const auto bs = compute_batch_stats(model, state.global, batch, workers);
  auto lambda = M::params(state.global);
  double norm = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    lambda[i] += bs.stats.values[i];
    norm += bs.stats.values[i] * bs.stats.values[i];
  }
  state.diagnostics.last_gradient_norm = std::sqrt(norm);
  detail::finish_update(model, state, batch.size(), bs.nonconverged);
}

// Engine state with lambda set to the prior, as SVB requires.
template <VariationalModel M>
EngineState<M> prior_state(const M& model) {
  auto lambda = model.prior();
  return EngineState<M>{model.global_from(std::move(lambda)), 0, 0, {}};
}

// SVI as population VB with alpha = N over an empirical resampler seeded with
// config.seed. Returns the state after each of `steps` iterations.
template <VariationalModel M>
std::vector<EngineState<M>> svi_run(std::span<const typename M::Datum> dataset, const OptimizerConfig& config,
                                    const M& model, EngineState<M> initial, std::size_t steps) {
  if (dataset.empty()) throw std::invalid_argument("SVI needs a nonempty dataset");
  if (config.algorithm != Algorithm::kSVI) throw ConfigError("algorithm", "svi_run requires algorithm = svi");
  if (config.alpha != static_cast<double>(dataset.size())) {
    throw ConfigError("alpha", "SVI requires alpha equal to the dataset size " + std::to_string(dataset.size()));
  }
  config.validate();
  auto stream = StreamSource<typename M::Datum>::empirical_resample(
      std::vector<typename M::Datum>(dataset.begin(), dataset.end()), config.seed);
  std::vector<EngineState<M>> trajectory;
  trajectory.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = stream.next_minibatch(config.batch_size);
    popvb_step<M>(initial, batch, config, model);
    trajectory.push_back(initial);
  }
  return trajectory;
}

// Estimate of the population objective at lambda from a sample:
//   -KL(q(beta) || p(beta)) + (alpha / |sample|) sum_i ELBO_i(phi_i(lambda)).
// Global terms are closed form. With mc_draws > 0 the expectations under
// q(beta) entering the per-point terms are Monte-Carlo averages over
// mc_draws draws; otherwise they are exact.
template <VariationalModel M>
double estimate_felbo(const M& model, const typename M::Global& global, std::span<const typename M::Datum> sample,
                      double alpha, int mc_draws = 0, std::uint64_t seed = 0) {
  if (sample.empty()) throw std::invalid_argument("F-ELBO estimate needs a nonempty sample");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  double value = -model.global_kl(global);
  if (alpha == 0.0) return value;
  std::mt19937_64 rng(seed);
  const auto expectations = mc_draws > 0 ? model.monte_carlo_expectations(global, mc_draws, rng) : global;
  double local_sum = 0.0;
  for (const auto& x : sample) {
    const auto local = model.local_step(x, global);
    local_sum += model.local_elbo(x, local, expectations);
  }
  return value + alpha / static_cast<double>(sample.size()) * local_sum;
}

}  // namespace popvb
