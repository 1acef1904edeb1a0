// popvb: train and evaluate streaming variational models from a key = value config.
//
//   popvb run    [--config FILE] [overrides...]
//   popvb sweep  [--config FILE] --alphas 1e2,1e3,dataset [--sweep-out FILE] [overrides...]
//   popvb config [--config FILE] [overrides...]     print the resolved configuration

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "popvb/errors.hpp"
#include "popvb/runner.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::optional<std::string> alpha;
  std::optional<std::string> batch_size;
  std::optional<std::string> learning_rate;
  std::optional<std::string> stream;
  std::optional<std::string> eval_every;
  std::optional<std::string> heldout_window;
  std::optional<std::string> seed;
  std::optional<std::string> out;
  std::optional<std::string> workers;
  bool pooled_tokens = false;
  std::vector<std::string> settings;
};

void add_overrides(CLI::App& cmd, Overrides& o) {
  cmd.add_option("-c,--config", o.config, "key = value configuration file");
  cmd.add_option("--alpha", o.alpha, "population size, or 'dataset'");
  cmd.add_option("--batch-size", o.batch_size, "minibatch size");
  cmd.add_option("--learning-rate", o.learning_rate, "step size in (0, 1]");
  cmd.add_option("--stream", o.stream, "ordered, permuted, resample or synthetic");
  cmd.add_option("--eval-every", o.eval_every, "data points between evaluations");
  cmd.add_option("--heldout-window", o.heldout_window, "held-out points per evaluation");
  cmd.add_option("--seed", o.seed, "random seed");
  cmd.add_option("--out", o.out, "metrics CSV path");
  cmd.add_option("--workers", o.workers, "threads for the local steps");
  cmd.add_flag("--pooled-tokens", o.pooled_tokens, "average held-out log likelihood over pooled tokens");
  cmd.add_option("--set", o.settings, "extra key=value setting (repeatable)");
}

popvb::RunConfig resolve(const Overrides& o) {
  popvb::RunConfig c = o.config.empty() ? popvb::RunConfig{} : popvb::load_config(o.config);
  const std::pair<const char*, const std::optional<std::string>*> flags[] = {
      {"alpha", &o.alpha},       {"batch_size", &o.batch_size},
      {"learning_rate", &o.learning_rate}, {"stream", &o.stream},
      {"eval_every", &o.eval_every},       {"heldout_window", &o.heldout_window},
      {"seed", &o.seed},         {"out", &o.out},
      {"workers", &o.workers},
  };
  for (const auto& [key, value] : flags) {
    if (*value) popvb::apply_setting(c, key, **value);
  }
  if (o.pooled_tokens) c.pooled_tokens = true;
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw popvb::ConfigError(s, "--set expects key=value");
    popvb::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  return c;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "popvb: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population variational Bayes for streaming data"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "train one model and write the metrics CSV");
  add_overrides(*run, run_opts);

  Overrides sweep_opts;
  std::string alphas;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run once per alpha and write final held-out scores");
  add_overrides(*sweep, sweep_opts);
  sweep->add_option("--alphas", alphas, "comma-separated alpha grid ('dataset' allowed)")->required();
  sweep->add_option("--sweep-out", sweep_out, "combined CSV path (default: stdout)");

  Overrides show_opts;
  auto* show = app.add_subcommand("config", "print the resolved configuration");
  add_overrides(*show, show_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      const auto config = resolve(run_opts);
      const auto result = popvb::run_experiment(config);
      if (config.out.empty()) {
        std::cout << popvb::kMetricsHeader << '\n';
        for (const auto& r : result.records) std::cout << popvb::to_csv_row(r) << '\n';
      }
    } else if (*sweep) {
      const auto config = resolve(sweep_opts);
      const auto grid = popvb::parse_alpha_grid(alphas);
      const auto rows = popvb::alpha_sweep(config, grid, sweep_out);
      if (sweep_out.empty()) {
        std::cout << popvb::kSweepHeader << '\n';
        for (const auto& r : rows) {
          std::cout << popvb::format_real(r.alpha) << ',' << popvb::format_real(r.final_heldout_avg_ll) << ','
                    << popvb::format_real(r.best_heldout_avg_ll) << ',' << r.data_seen << '\n';
        }
      }
    } else if (*show) {
      const auto config = resolve(show_opts);
      popvb::validate_config(config);
      std::cout << popvb::serialize_config(config);
    }
  } catch (const popvb::ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const popvb::ParseError& e) {
    return report("parse error", e, kIo);
  } catch (const popvb::IoError& e) {
    return report("I/O error", e, kIo);
  } catch (const popvb::NumericError& e) {
    return report("numeric failure", e, kNumeric);
  } catch (const std::exception& e) {
    return report("error", e, kFailure);
  }
  return kOk;
}
