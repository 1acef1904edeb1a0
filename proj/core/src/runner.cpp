#include "popvb/runner.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

#include "popvb/dpmix.hpp"
#include "popvb/lda.hpp"
#include "popvb/log.hpp"
#include "popvb/stream.hpp"

namespace popvb {

namespace {

// ---- value parsing ----

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_real(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError(std::string(key), "expected a finite number, got '" + std::string(v) + "'");
  }
  return x;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  }
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

std::vector<double> to_reals(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (auto part : split(v, ',')) out.push_back(to_real(key, part));
  return out;
}

std::string join(const std::vector<double>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_real(v[i]);
  }
  return s;
}

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<ModelKind> kModels[] = {{ModelKind::kLda, "lda"}, {ModelKind::kDpMix, "dpmix"}};
constexpr EnumName<SourceKind> kSources[] = {{SourceKind::kOrdered, "ordered"},
                                             {SourceKind::kPermuted, "permuted"},
                                             {SourceKind::kResample, "resample"},
                                             {SourceKind::kSynthetic, "synthetic"}};
constexpr EnumName<GeneratorKind> kGenerators[] = {{GeneratorKind::kLda, "lda"},
                                                   {GeneratorKind::kGaussianMixture, "gaussian_mixture"}};

template <typename E, std::size_t N>
E to_enum(const EnumName<E> (&table)[N], std::string_view key, std::string_view v) {
  std::string options;
  for (const auto& e : table) {
    if (e.name == v) return e.value;
    options += (options.empty() ? "" : ", ") + std::string(e.name);
  }
  throw ConfigError(std::string(key), "unknown value '" + std::string(v) + "' (expected " + options + ")");
}

template <typename E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E value) {
  for (const auto& e : table) {
    if (e.value == value) return std::string(e.name);
  }
  return "?";
}

std::optional<double> to_alpha(std::string_view key, std::string_view v) {
  if (v == "dataset") return std::nullopt;
  return to_real(key, v);
}

std::string alpha_name(const std::optional<double>& a) { return a ? format_real(*a) : "dataset"; }

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define POPVB_REAL(name) \
  Field{#name, [](RunConfig& c, std::string_view v) { c.name = to_real(#name, v); }, \
        [](const RunConfig& c) { return format_real(c.name); }}
#define POPVB_INT(name)                                                                                   \
  Field{#name, [](RunConfig& c, std::string_view v) { c.name = to_int<decltype(c.name)>(#name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.name); }}
#define POPVB_BOOL(name) \
  Field{#name, [](RunConfig& c, std::string_view v) { c.name = to_bool(#name, v); }, \
        [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }}
#define POPVB_TEXT(name) \
  Field{#name, [](RunConfig& c, std::string_view v) { c.name = std::string(v); }, \
        [](const RunConfig& c) { return c.name; }}
#define POPVB_REALS(name) \
  Field{#name, [](RunConfig& c, std::string_view v) { c.name = to_reals(#name, v); }, \
        [](const RunConfig& c) { return join(c.name); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"model", [](RunConfig& c, std::string_view v) { c.model = to_enum(kModels, "model", v); },
            [](const RunConfig& c) { return enum_name(kModels, c.model); }},
      Field{"algorithm", [](RunConfig& c, std::string_view v) { c.algorithm = parse_algorithm(v); },
            [](const RunConfig& c) { return std::string(to_string(c.algorithm)); }},
      Field{"alpha", [](RunConfig& c, std::string_view v) { c.alpha = to_alpha("alpha", v); },
            [](const RunConfig& c) { return alpha_name(c.alpha); }},
      POPVB_INT(batch_size),
      POPVB_REAL(learning_rate),
      POPVB_INT(seed),
      POPVB_INT(workers),
      Field{"stream", [](RunConfig& c, std::string_view v) { c.stream = to_enum(kSources, "stream", v); },
            [](const RunConfig& c) { return enum_name(kSources, c.stream); }},
      POPVB_TEXT(corpus),
      POPVB_TEXT(vocab),
      POPVB_TEXT(locations),
      POPVB_INT(downsample_seconds),
      Field{"syn_generator",
            [](RunConfig& c, std::string_view v) { c.syn_generator = to_enum(kGenerators, "syn_generator", v); },
            [](const RunConfig& c) { return enum_name(kGenerators, c.syn_generator); }},
      POPVB_INT(syn_count),
      POPVB_INT(syn_seed),
      POPVB_INT(syn_topics),
      POPVB_REAL(syn_topic_eta),
      POPVB_REAL(syn_doc_alpha),
      POPVB_REAL(syn_doc_length),
      POPVB_REALS(syn_weights),
      Field{"syn_means",
            [](RunConfig& c, std::string_view v) {
              c.syn_means.clear();
              if (v.empty()) return;
              for (auto row : split(v, ';')) c.syn_means.push_back(to_reals("syn_means", row));
            },
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.syn_means.size(); ++i) s += (i ? ";" : "") + join(c.syn_means[i]);
              return s;
            }},
      POPVB_REALS(syn_stddev),
      POPVB_INT(max_data),
      POPVB_INT(eval_every),
      POPVB_INT(heldout_window),
      POPVB_BOOL(final_eval),
      POPVB_BOOL(pooled_tokens),
      POPVB_BOOL(felbo),
      POPVB_INT(felbo_mc_draws),
      POPVB_BOOL(timing),
      POPVB_INT(K),
      POPVB_INT(V),
      POPVB_REAL(eta),
      POPVB_REAL(gamma_doc),
      POPVB_REAL(local_tol),
      POPVB_INT(local_max_iters),
      POPVB_INT(K_trunc),
      POPVB_REAL(stick_eta),
      POPVB_REALS(precision),
      POPVB_REALS(prior_mean),
      POPVB_REAL(prior_count),
      Field{"conditioned_dims",
            [](RunConfig& c, std::string_view v) {
              if (v == "auto") {
                c.conditioned_dims.reset();
                return;
              }
              std::vector<std::size_t> dims;
              if (v != "none") {
                for (auto part : split(v, ',')) dims.push_back(to_int<std::size_t>("conditioned_dims", part));
              }
              c.conditioned_dims = std::move(dims);
            },
            [](const RunConfig& c) {
              if (!c.conditioned_dims) return std::string("auto");
              if (c.conditioned_dims->empty()) return std::string("none");
              std::string s;
              for (std::size_t i = 0; i < c.conditioned_dims->size(); ++i) {
                s += (i ? "," : "") + std::to_string((*c.conditioned_dims)[i]);
              }
              return s;
            }},
      Field{"dp_init",
            [](RunConfig& c, std::string_view v) {
              if (v == "sequential") {
                c.dp_sequential_init = true;
              } else if (v == "prior") {
                c.dp_sequential_init = false;
              } else {
                throw ConfigError("dp_init", "expected sequential or prior, got '" + std::string(v) + "'");
              }
            },
            [](const RunConfig& c) { return std::string(c.dp_sequential_init ? "sequential" : "prior"); }},
      POPVB_INT(dp_init_size),
      POPVB_TEXT(out),
  };
  return table;
}

#undef POPVB_REAL
#undef POPVB_INT
#undef POPVB_BOOL
#undef POPVB_TEXT
#undef POPVB_REALS

// ---- data and model construction ----

template <typename T>
struct Dataset {
  std::vector<T> records;
  // Endless generator for stream = synthetic.
  std::optional<StreamSource<T>> generator;
};

std::vector<double> broadcast(std::vector<double> v, std::size_t dim, const char* key) {
  if (v.size() == 1 && dim > 1) v.assign(dim, v[0]);
  if (v.size() != dim) {
    throw ConfigError(key, "has " + std::to_string(v.size()) + " entries, expected 1 or " + std::to_string(dim));
  }
  return v;
}

GaussianMixtureGenerator make_mixture_generator(const RunConfig& c) {
  GaussianMixtureGenerator g;
  g.weights = c.syn_weights;
  if (c.syn_means.size() != c.syn_weights.size()) {
    throw ConfigError("syn_means", "needs one mean per entry of syn_weights");
  }
  const std::size_t dim = c.syn_means.empty() ? 0 : c.syn_means.front().size();
  for (const auto& m : c.syn_means) {
    if (m.size() != dim) throw ConfigError("syn_means", "all means must have the same dimension");
    g.means.insert(g.means.end(), m.begin(), m.end());
  }
  g.stddev = broadcast(c.syn_stddev, dim, "syn_stddev");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("syn_means", e.what());
  }
  return g;
}

template <typename T>
Dataset<T> from_generator(const RunConfig& c, StreamSource<T> gen) {
  Dataset<T> d;
  if (c.stream == SourceKind::kSynthetic) {
    d.generator = std::move(gen);
  } else {
    d.records = gen.next_minibatch(c.syn_count);
  }
  return d;
}

std::size_t resolve_vocab(const RunConfig& c) {
  if (!c.vocab.empty()) {
    const auto terms = load_vocabulary(c.vocab);
    if (c.V != 0 && c.V != terms.size()) {
      throw ConfigError("V", "vocabulary file has " + std::to_string(terms.size()) + " terms but V = " +
                                 std::to_string(c.V));
    }
    return terms.size();
  }
  if (c.V == 0) throw ConfigError("V", "set V or provide a vocab file");
  return c.V;
}

Dataset<Document> load_documents(const RunConfig& c, std::size_t vocab_size) {
  if (!c.corpus.empty()) return {load_corpus(c.corpus, vocab_size), std::nullopt};
  LdaGenerator gen;
  try {
    gen = LdaGenerator::random(c.syn_topics, vocab_size, c.syn_topic_eta, c.syn_doc_alpha, c.syn_doc_length,
                               c.syn_seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("syn_topics", e.what());
  }
  return from_generator(c, synthesize_stream(gen, c.syn_seed));
}

Dataset<Observation> load_observations(const RunConfig& c) {
  if (!c.locations.empty()) {
    auto records = load_locations(c.locations);
    if (c.downsample_seconds > 0) records = downsample_by_user(records, c.downsample_seconds);
    Dataset<Observation> d;
    d.records.reserve(records.size());
    for (const auto& r : records) d.records.push_back(to_observation(r));
    return d;
  }
  return from_generator(c, synthesize_stream(make_mixture_generator(c), c.syn_seed));
}

bool text_source(const RunConfig& c) {
  if (!c.corpus.empty()) return true;
  if (!c.locations.empty()) return false;
  return c.syn_generator == GeneratorKind::kLda;
}

template <typename T>
StreamSource<T> make_stream(const RunConfig& c, Dataset<T> data) {
  switch (c.stream) {
    case SourceKind::kOrdered:
      return StreamSource<T>::ordered(std::move(data.records));
    case SourceKind::kPermuted:
      return StreamSource<T>::permuted(std::move(data.records), c.seed);
    case SourceKind::kResample:
      if (data.records.empty()) throw ConfigError("stream", "cannot resample an empty dataset");
      return StreamSource<T>::empirical_resample(std::move(data.records), c.seed);
    case SourceKind::kSynthetic:
      return std::move(*data.generator);
  }
  throw std::logic_error("unknown stream");
}

template <typename Spec>
Spec checked(Spec spec, const char* key) {
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
  return spec;
}

LdaSpec make_lda_spec(const RunConfig& c, std::size_t vocab_size) {
  LdaSpec s;
  s.num_topics = c.K;
  s.vocab_size = vocab_size;
  s.eta = c.eta;
  s.gamma_doc = c.gamma_doc;
  s.local_tol = c.local_tol;
  s.local_max_iters = c.local_max_iters;
  return checked(s, "K");
}

DpMixSpec make_text_dp_spec(const RunConfig& c, std::size_t vocab_size) {
  if (!(c.eta > 0.0)) throw ConfigError("eta", "must be positive");
  DpMixSpec s;
  s.truncation = c.K_trunc;
  s.stick_eta = c.stick_eta;
  s.component_prior = NatParam(FamilyKind::dirichlet(vocab_size), std::vector<double>(vocab_size, c.eta));
  if (c.conditioned_dims && !c.conditioned_dims->empty()) {
    throw ConfigError("conditioned_dims", "text mixtures cannot condition on dimensions");
  }
  return checked(s, "K_trunc");
}

DpMixSpec make_gaussian_dp_spec(const RunConfig& c, std::size_t dim) {
  DpMixSpec s;
  s.truncation = c.K_trunc;
  s.stick_eta = c.stick_eta;
  auto precision = broadcast(c.precision, dim, "precision");
  for (double t : precision) {
    if (!(t > 0.0)) throw ConfigError("precision", "must be positive");
  }
  if (!(c.prior_count > 0.0)) throw ConfigError("prior_count", "must be positive");
  const auto mean = broadcast(c.prior_mean, dim, "prior_mean");
  s.component_prior = gaussian_component_prior(mean, c.prior_count, std::move(precision));
  if (c.conditioned_dims) {
    s.conditioned_dims = *c.conditioned_dims;
  } else if (!c.locations.empty()) {
    s.conditioned_dims = {2};
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("conditioned_dims", e.what());
  }
  return s;
}

class CsvSink {
 public:
  explicit CsvSink(const std::string& path, std::string_view header) {
    if (path.empty()) return;
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) throw IoError("cannot open output " + path);
    write(header);
  }

  void write(std::string_view row) {
    if (!out_.is_open()) return;
    out_ << row << '\n';
    out_.flush();
    if (!out_) throw IoError("write failure on metrics output");
  }

 private:
  std::ofstream out_;
};

template <typename M>
RunResult drive(const RunConfig& c, const M& model, Dataset<typename M::Datum> data) {
  const bool finite_data = c.stream != SourceKind::kSynthetic;
  const std::size_t n = data.records.size();
  if (!c.alpha && !finite_data) throw ConfigError("alpha", "alpha = dataset requires a finite dataset");
  const double alpha = c.alpha ? *c.alpha : static_cast<double>(n);

  OptimizerConfig oc;
  oc.alpha = alpha;
  oc.batch_size = c.batch_size;
  oc.learning_rate = c.learning_rate;
  oc.seed = c.seed;
  oc.algorithm = c.algorithm;
  oc.workers = c.workers;
  if (c.algorithm == Algorithm::kSVI && alpha != static_cast<double>(n)) {
    throw ConfigError("alpha", "svi requires alpha = dataset (N = " + std::to_string(n) + "), got " +
                                   format_real(alpha));
  }
  if (c.algorithm != Algorithm::kSVB) oc.validate();

  auto stream = make_stream(c, std::move(data));
  EngineState<M> state;
  if constexpr (requires { model.seed_from_sample(std::span<const typename M::Datum>()); }) {
    if (c.dp_sequential_init) {
      const auto sample = stream.heldout_window(c.dp_init_size);
      state.global = model.seed_from_sample(sample);
    } else {
      state.global = model.init_global(c.seed);
    }
  } else {
    state.global = model.init_global(c.seed);
  }

  RunResult result;
  result.alpha_used = alpha;
  CsvSink sink(c.out, kMetricsHeader);
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t eval_every = c.effective_eval_every();
  const std::uint64_t eval_seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  std::uint64_t next_eval = eval_every;

  auto evaluate = [&] {
    const auto window = stream.heldout_window(c.heldout_window);
    const auto ws = evaluate_window(model, state.global, std::span<const typename M::Datum>(window), eval_seed,
                                    c.pooled_tokens);
    MetricsRecord r;
    r.iteration = state.iteration;
    r.data_seen = state.data_seen;
    r.heldout_avg_ll = ws.heldout_avg_ll;
    r.valid = ws.valid;
    r.alpha = c.algorithm == Algorithm::kSVB ? static_cast<double>(std::max<std::uint64_t>(1, state.data_seen)) : alpha;
    r.algorithm = c.algorithm;
    if (c.felbo && !window.empty()) {
      r.felbo_estimate = estimate_felbo(model, state.global, std::span<const typename M::Datum>(window), r.alpha,
                                        c.felbo_mc_draws, eval_seed);
    }
    if (c.timing) r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    sink.write(to_csv_row(r));
    log_message(LogLevel::kInfo, "iteration " + std::to_string(r.iteration) + " data_seen " +
                                     std::to_string(r.data_seen) + " heldout " + format_real(r.heldout_avg_ll));
    result.records.push_back(r);
  };

  while (c.max_data == 0 || state.data_seen < c.max_data) {
    std::size_t want = c.batch_size;
    if (c.max_data) want = static_cast<std::size_t>(std::min<std::uint64_t>(want, c.max_data - state.data_seen));
    const auto batch = stream.next_minibatch(want);
    if (batch.empty()) break;
    if (c.algorithm == Algorithm::kSVB) {
      svb_step<M>(state, batch, model, c.workers);
    } else {
      popvb_step<M>(state, batch, oc, model);
    }
    log_message(LogLevel::kDebug, "iteration " + std::to_string(state.iteration) + " gradient norm " +
                                      format_real(state.diagnostics.last_gradient_norm));
    while (state.data_seen >= next_eval) {
      evaluate();
      next_eval += eval_every;
    }
  }
  if (c.final_eval) evaluate();
  if (state.diagnostics.floor_clamps > 0) {
    log_message(LogLevel::kWarn, std::to_string(state.diagnostics.floor_clamps) + " coordinates clamped to the floor");
  }
  if (state.diagnostics.local_nonconverged > 0) {
    log_message(LogLevel::kInfo,
                std::to_string(state.diagnostics.local_nonconverged) + " local steps hit local_max_iters");
  }

  result.data_seen = state.data_seen;
  result.diagnostics = state.diagnostics;
  if (!result.records.empty()) result.summary = aggregate_run(result.records);
  return result;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t start = 0;
  std::size_t number = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("line " + std::to_string(number), "expected key = value");
      }
      apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

void validate_config(const RunConfig& c) {
  const bool svb = c.algorithm == Algorithm::kSVB;
  if (!svb && c.alpha && !(*c.alpha >= 1.0)) throw ConfigError("alpha", "must be at least 1");
  if (c.batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!svb && !(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) {
    throw ConfigError("learning_rate", "must lie in (0, 1]");
  }
  if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (!c.corpus.empty() && !c.locations.empty()) throw ConfigError("corpus", "set either corpus or locations");
  const bool from_file = !c.corpus.empty() || !c.locations.empty();
  if (from_file && c.stream == SourceKind::kSynthetic) {
    throw ConfigError("stream", "synthetic streams read no input file");
  }
  if (!from_file && c.stream != SourceKind::kSynthetic && c.syn_count == 0) {
    throw ConfigError("syn_count", "finite synthetic data needs syn_count > 0 (or give an input file)");
  }
  const bool endless = c.stream == SourceKind::kSynthetic || c.stream == SourceKind::kResample;
  if (endless && c.max_data == 0) throw ConfigError("max_data", "endless streams need max_data > 0");
  if (!c.alpha && c.stream == SourceKind::kSynthetic) {
    throw ConfigError("alpha", "alpha = dataset requires a finite dataset");
  }
  if (c.algorithm == Algorithm::kSVI) {
    if (c.stream != SourceKind::kResample) throw ConfigError("stream", "svi requires stream = resample");
  }
  if (c.model == ModelKind::kLda && !text_source(c)) {
    throw ConfigError("model", "lda needs a corpus or the lda generator");
  }
  if (c.felbo_mc_draws < 0) throw ConfigError("felbo_mc_draws", "must be nonnegative");
  if (c.model == ModelKind::kDpMix && c.K_trunc < 1) throw ConfigError("K_trunc", "must be at least 1");
}

RunResult run_experiment(const RunConfig& c) {
  validate_config(c);
  if (text_source(c)) {
    const std::size_t vocab_size = resolve_vocab(c);
    if (c.model == ModelKind::kLda) {
      const LdaModel model(make_lda_spec(c, vocab_size));
      return drive(c, model, load_documents(c, vocab_size));
    }
    const DpTextMixture model(make_text_dp_spec(c, vocab_size));
    return drive(c, model, load_documents(c, vocab_size));
  }
  auto data = load_observations(c);
  std::size_t dim = 0;
  if (!c.locations.empty()) {
    dim = 3;
  } else {
    dim = c.syn_means.empty() ? 0 : c.syn_means.front().size();
  }
  const DpGaussianMixture model(make_gaussian_dp_spec(c, dim));
  return drive(c, model, std::move(data));
}

std::vector<std::optional<double>> parse_alpha_grid(std::string_view text) {
  std::vector<std::optional<double>> grid;
  for (auto part : split(trim(text), ',')) {
    if (part.empty()) continue;
    grid.push_back(to_alpha("alphas", part));
  }
  if (grid.empty()) throw ConfigError("alphas", "grid is empty");
  return grid;
}

std::vector<SweepRow> alpha_sweep(const RunConfig& base, const std::vector<std::optional<double>>& grid,
                                  const std::string& out) {
  if (grid.empty()) throw ConfigError("alphas", "grid is empty");
  CsvSink sink(out, kSweepHeader);
  std::vector<SweepRow> rows;
  for (const auto& a : grid) {
    RunConfig c = base;
    c.alpha = a;
    c.out.clear();
    const auto result = run_experiment(c);
    SweepRow row;
    row.alpha = result.alpha_used;
    row.data_seen = result.data_seen;
    row.final_heldout_avg_ll =
        result.records.empty() ? std::numeric_limits<double>::quiet_NaN() : result.summary.final_heldout_avg_ll;
    row.best_heldout_avg_ll =
        result.records.empty() ? std::numeric_limits<double>::quiet_NaN() : result.summary.best_heldout_avg_ll;
    sink.write(format_real(row.alpha) + "," + format_real(row.final_heldout_avg_ll) + "," +
               format_real(row.best_heldout_avg_ll) + "," + std::to_string(row.data_seen));
    log_message(LogLevel::kInfo, "alpha " + format_real(row.alpha) + " final " + format_real(row.final_heldout_avg_ll));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace popvb
