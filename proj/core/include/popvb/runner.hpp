#pragma once

// Experiment runner: binds a data source, a model, an optimiser and the
// held-out evaluation cadence. Configuration is a flat `key = value` text
// format ('#' starts a comment); every key is listed in RunConfig below.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "popvb/engine.hpp"
#include "popvb/eval.hpp"

namespace popvb {

enum class ModelKind { kLda, kDpMix };
enum class SourceKind { kOrdered, kPermuted, kResample, kSynthetic };
enum class GeneratorKind { kLda, kGaussianMixture };

struct RunConfig {
  ModelKind model = ModelKind::kLda;
  Algorithm algorithm = Algorithm::kPopVB;
  // nullopt means "dataset": alpha equals the number of records (finite data only).
  std::optional<double> alpha = 1e4;
  std::size_t batch_size = 100;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  SourceKind stream = SourceKind::kOrdered;
  std::string corpus;
  std::string vocab;
  std::string locations;
  // Minimum seconds between kept records of one user (0 keeps everything).
  std::int64_t downsample_seconds = 0;

  GeneratorKind syn_generator = GeneratorKind::kLda;
  // Records materialised from the generator for ordered/permuted/resample streams.
  std::size_t syn_count = 0;
  std::uint64_t syn_seed = 1;
  std::size_t syn_topics = 10;
  double syn_topic_eta = 0.1;
  double syn_doc_alpha = 0.5;
  double syn_doc_length = 50.0;
  std::vector<double> syn_weights{1.0};
  // Component means separated by ';', coordinates by ','.
  std::vector<std::vector<double>> syn_means{{0.0}};
  std::vector<double> syn_stddev{1.0};

  // Stop after this many training points (0: run a finite stream to the end).
  std::uint64_t max_data = 0;
  // 0: ten minibatches.
  std::uint64_t eval_every = 0;
  std::size_t heldout_window = 10000;
  bool final_eval = false;
  bool pooled_tokens = false;
  bool felbo = true;
  int felbo_mc_draws = 0;
  // Record wall-clock seconds; otherwise the column is 0 so runs are byte-identical.
  bool timing = false;

  // LDA (V = 0: taken from the vocabulary file or the generator).
  std::size_t K = 100;
  std::size_t V = 0;
  double eta = 0.01;
  double gamma_doc = 0.1;
  double local_tol = 1e-4;
  int local_max_iters = 100;

  // DP mixtures.
  std::size_t K_trunc = 100;
  double stick_eta = 1.0;
  // One value broadcasts over every dimension.
  std::vector<double> precision{1.0};
  std::vector<double> prior_mean{0.0};
  double prior_count = 1.0;
  // nullopt: time-of-week for location files, none otherwise.
  std::optional<std::vector<std::size_t>> conditioned_dims;
  // sequential: seed components from the first dp_init_size stream points; prior: leave all at the prior.
  bool dp_sequential_init = true;
  std::size_t dp_init_size = 1000;

  std::string out;

  std::uint64_t effective_eval_every() const { return eval_every ? eval_every : 10 * batch_size; }
};

// Throws ConfigError naming the key on unknown keys or malformed values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
std::string serialize_config(const RunConfig& config);

// Field-level checks that need no data. Throws ConfigError.
void validate_config(const RunConfig& config);

struct RunResult {
  std::vector<MetricsRecord> records;
  RunSummary summary;
  std::uint64_t data_seen = 0;
  double alpha_used = 0.0;
  Diagnostics diagnostics;
};

// Trains and evaluates, appending one CSV row per evaluation to config.out
// (when set) and flushing after each. Throws ConfigError, IoError/ParseError
// or NumericError.
RunResult run_experiment(const RunConfig& config);

struct SweepRow {
  double alpha = 0.0;
  double final_heldout_avg_ll = 0.0;
  double best_heldout_avg_ll = 0.0;
  std::uint64_t data_seen = 0;
};

inline constexpr std::string_view kSweepHeader = "alpha,final_heldout_avg_ll,best_heldout_avg_ll,data_seen";

// One run per alpha (nullopt = "dataset") with shared seed and stream. Rows are
// appended to `out` as runs finish; a failing run aborts the sweep after the
// completed rows are written.
std::vector<SweepRow> alpha_sweep(const RunConfig& base, const std::vector<std::optional<double>>& grid,
                                  const std::string& out = {});

std::vector<std::optional<double>> parse_alpha_grid(std::string_view text);

}  // namespace popvb
