#include "popvb/stream.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "popvb/errors.hpp"

namespace popvb {

namespace {

constexpr std::int64_t kSecondsPerWeek = 7 * 24 * 3600;
// 1970-01-05 00:00 UTC, the first Monday after the epoch.
constexpr std::int64_t kFirstMonday = 4 * 24 * 3600;

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename Int>
Int parse_integer(std::string_view text, std::size_t column, const char* what) {
  Int value{};
  if (text.empty()) throw ParseError(std::string("empty ") + what, column);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc::result_out_of_range) throw ParseError(std::string(what) + " out of range", column);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(text) + "'", column);
  }
  return value;
}

double parse_real(std::string_view text, std::size_t column, const char* what) {
  double value = 0.0;
  if (text.empty()) throw ParseError(std::string("empty ") + what, column);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(text) + "'", column);
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

double draw_log_gamma(double shape, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(shape < 1.0 ? shape + 1.0 : shape, 1.0);
  double lg = std::log(g(rng));
  if (shape < 1.0) {
    std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
    lg += std::log(u(rng)) / shape;
  }
  return lg;
}

std::vector<double> draw_dirichlet(std::size_t dim, double concentration, std::mt19937_64& rng) {
  std::vector<double> logs(dim);
  double top = -std::numeric_limits<double>::infinity();
  for (auto& v : logs) {
    v = draw_log_gamma(concentration, rng);
    top = std::max(top, v);
  }
  double total = 0.0;
  for (auto& v : logs) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : logs) v /= total;
  return logs;
}

}  // namespace

Document parse_corpus_line(std::string_view line, std::size_t vocab_size) {
  line = strip_cr(line);
  std::vector<WordCount> counts;
  std::unordered_map<std::uint32_t, std::size_t> seen;
  std::size_t i = 0;
  while (i < line.size()) {
    if (is_blank(line[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !is_blank(line[i])) ++i;
    const std::string_view token = line.substr(start, i - start);
    const std::size_t column = start + 1;
    const auto colon = token.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("expected word_id:count, got '" + std::string(token) + "'", column);
    }
    const auto id = parse_integer<std::uint32_t>(token.substr(0, colon), column, "word id");
    const auto count = parse_integer<std::uint32_t>(token.substr(colon + 1), column + colon + 1, "count");
    if (id >= vocab_size) {
      throw ParseError("word id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(vocab_size),
                       column);
    }
    if (count == 0) throw ParseError("count for word " + std::to_string(id) + " must be positive", column + colon + 1);
    if (!seen.emplace(id, column).second) {
      throw ParseError("word id " + std::to_string(id) + " repeated", column);
    }
    counts.push_back({id, count});
  }
  return Document::from_counts(std::move(counts));
}

double time_of_week(std::int64_t unix_seconds) {
  std::int64_t r = (unix_seconds - kFirstMonday) % kSecondsPerWeek;
  if (r < 0) r += kSecondsPerWeek;
  return static_cast<double>(r) / static_cast<double>(kSecondsPerWeek);
}

LocationRecord parse_location_record(std::string_view line) {
  line = strip_cr(line);
  std::string_view fields[4];
  std::size_t columns[4];
  std::size_t start = 0;
  for (int f = 0; f < 4; ++f) {
    const auto comma = line.find(',', start);
    const bool last = f == 3;
    if (!last && comma == std::string_view::npos) {
      throw ParseError("expected 4 comma-separated fields, found " + std::to_string(f + 1), line.size() + 1);
    }
    if (last && comma != std::string_view::npos) throw ParseError("more than 4 fields", comma + 1);
    const auto end = last ? line.size() : comma;
    fields[f] = line.substr(start, end - start);
    columns[f] = start + 1;
    start = end + 1;
  }
  LocationRecord r;
  if (fields[0].empty()) throw ParseError("empty user_id", columns[0]);
  r.user_id = std::string(fields[0]);
  r.timestamp = parse_integer<std::int64_t>(fields[1], columns[1], "timestamp");
  r.lat = parse_real(fields[2], columns[2], "latitude");
  r.lon = parse_real(fields[3], columns[3], "longitude");
  if (r.lat < -90.0 || r.lat > 90.0) throw ParseError("latitude outside [-90, 90]", columns[2]);
  if (r.lon < -180.0 || r.lon > 180.0) throw ParseError("longitude outside [-180, 180]", columns[3]);
  return r;
}

Observation to_observation(const LocationRecord& r) { return {r.lat, r.lon, time_of_week(r.timestamp)}; }

Observation parse_location_line(std::string_view line) { return to_observation(parse_location_record(line)); }

std::vector<std::string> load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) terms.emplace_back(strip_cr(line));
  if (in.bad()) throw IoError("read failure in " + path.string());
  return terms;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, std::size_t vocab_size) {
  auto in = open_input(path);
  std::vector<Document> docs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    try {
      docs.push_back(parse_corpus_line(line, vocab_size));
    } catch (const ParseError& e) {
      throw e.at_line(number);
    }
  }
  if (in.bad()) throw IoError("read failure in " + path.string());
  return docs;
}

std::vector<LocationRecord> load_locations(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<LocationRecord> records;
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kLocationHeader) {
    throw ParseError("expected header '" + std::string(kLocationHeader) + "'", 1, 1);
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (strip_cr(line).empty()) continue;
    try {
      records.push_back(parse_location_record(line));
    } catch (const ParseError& e) {
      throw e.at_line(number);
    }
  }
  if (in.bad()) throw IoError("read failure in " + path.string());
  return records;
}

std::vector<LocationRecord> downsample_by_user(const std::vector<LocationRecord>& records,
                                               std::int64_t min_gap_seconds) {
  std::unordered_map<std::string, std::int64_t> last_kept;
  std::vector<LocationRecord> out;
  for (const auto& r : records) {
    auto it = last_kept.find(r.user_id);
    if (it != last_kept.end() && r.timestamp - it->second < min_gap_seconds) continue;
    last_kept[r.user_id] = r.timestamp;
    out.push_back(r);
  }
  return out;
}

void GaussianMixtureGenerator::validate() const {
  if (weights.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (stddev.empty()) throw std::invalid_argument("mixture dimension must be at least 1");
  if (means.size() != weights.size() * stddev.size()) throw std::invalid_argument("means must be components x dim");
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
  }
  if (!(std::accumulate(weights.begin(), weights.end(), 0.0) > 0.0)) {
    throw std::invalid_argument("mixture weights sum to zero");
  }
  for (double s : stddev) {
    if (!(s > 0.0)) throw std::invalid_argument("mixture stddev must be positive");
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw std::invalid_argument("mixture means must be finite");
  }
}

double GaussianMixtureGenerator::log_density(const Observation& x) const {
  const std::size_t D = dim();
  if (x.size() != D) throw std::invalid_argument("observation dimension mismatch");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> terms(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    double acc = std::log(weights[k] / total);
    for (std::size_t d = 0; d < D; ++d) {
      const double z = (x[d] - means[k * D + d]) / stddev[d];
      acc += -0.5 * std::log(2.0 * std::numbers::pi) - std::log(stddev[d]) - 0.5 * z * z;
    }
    terms[k] = acc;
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

LdaGenerator LdaGenerator::random(std::size_t num_topics, std::size_t vocab_size, double topic_eta, double doc_alpha,
                                  double mean_length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LdaGenerator g;
  g.num_topics = num_topics;
  g.vocab_size = vocab_size;
  g.doc_alpha = doc_alpha;
  g.mean_length = mean_length;
  for (std::size_t k = 0; k < num_topics; ++k) {
    const auto row = draw_dirichlet(vocab_size, topic_eta, rng);
    g.topics.insert(g.topics.end(), row.begin(), row.end());
  }
  g.validate();
  return g;
}

void LdaGenerator::validate() const {
  if (num_topics < 1 || vocab_size < 1) throw std::invalid_argument("generator needs topics and a vocabulary");
  if (topics.size() != num_topics * vocab_size) throw std::invalid_argument("topics must be K x V");
  for (std::size_t k = 0; k < num_topics; ++k) {
    double total = 0.0;
    for (std::size_t w = 0; w < vocab_size; ++w) {
      const double p = topics[k * vocab_size + w];
      if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("topic probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("topic " + std::to_string(k) + " does not sum to 1");
  }
  if (!(doc_alpha > 0.0)) throw std::invalid_argument("doc_alpha must be positive");
  if (!(mean_length > 0.0)) throw std::invalid_argument("mean_length must be positive");
}

StreamSource<Observation> synthesize_stream(const GaussianMixtureGenerator& spec, std::uint64_t seed) {
  spec.validate();
  auto pick = std::make_shared<std::discrete_distribution<std::size_t>>(spec.weights.begin(), spec.weights.end());
  return StreamSource<Observation>::synthetic(
      [spec, pick](std::mt19937_64& rng) {
        const std::size_t k = (*pick)(rng);
        const std::size_t D = spec.dim();
        Observation x(D);
        for (std::size_t d = 0; d < D; ++d) {
          std::normal_distribution<double> n(spec.means[k * D + d], spec.stddev[d]);
          x[d] = n(rng);
        }
        return x;
      },
      seed);
}

StreamSource<Document> synthesize_stream(const LdaGenerator& spec, std::uint64_t seed) {
  spec.validate();
  auto words = std::make_shared<std::vector<std::discrete_distribution<std::uint32_t>>>();
  for (std::size_t k = 0; k < spec.num_topics; ++k) {
    const auto first = spec.topics.begin() + static_cast<std::ptrdiff_t>(k * spec.vocab_size);
    words->emplace_back(first, first + static_cast<std::ptrdiff_t>(spec.vocab_size));
  }
  return StreamSource<Document>::synthetic(
      [spec, words](std::mt19937_64& rng) {
        const auto theta = draw_dirichlet(spec.num_topics, spec.doc_alpha, rng);
        std::discrete_distribution<std::size_t> topic(theta.begin(), theta.end());
        std::poisson_distribution<int> length(spec.mean_length);
        const int n = std::max(1, length(rng));
        std::vector<std::uint32_t> counts(spec.vocab_size, 0);
        for (int i = 0; i < n; ++i) ++counts[(*words)[topic(rng)](rng)];
        std::vector<WordCount> wc;
        for (std::uint32_t w = 0; w < counts.size(); ++w) {
          if (counts[w] > 0) wc.push_back({w, counts[w]});
        }
        return Document::from_counts(std::move(wc));
      },
      seed);
}

}  // namespace popvb
