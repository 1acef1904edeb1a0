#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "popvb/document.hpp"
#include "popvb/dpmix.hpp"

namespace popvb {

enum class StreamMode { kOrdered, kPermuted, kEmpiricalResample, kSynthetic };

// Single-consumer source of data points. Ordered and permuted streams are
// finite; empirical resampling (uniform with replacement) and synthetic
// generators are endless. Peeked held-out points are buffered and later
// re-delivered to training in the same order.
template <typename T>
class StreamSource {
 public:
  using Generator = std::function<T(std::mt19937_64&)>;

  static StreamSource ordered(std::vector<T> records) {
    return StreamSource(StreamMode::kOrdered, share(std::move(records)), 0);
  }

  static StreamSource permuted(std::vector<T> records, std::uint64_t seed) {
    StreamSource s(StreamMode::kPermuted, share(std::move(records)), seed);
    s.order_.resize(s.records_->size());
    std::iota(s.order_.begin(), s.order_.end(), std::size_t{0});
    std::shuffle(s.order_.begin(), s.order_.end(), s.rng_);
    return s;
  }

  static StreamSource empirical_resample(std::vector<T> records, std::uint64_t seed) {
    if (records.empty()) throw std::invalid_argument("cannot resample an empty dataset");
    return StreamSource(StreamMode::kEmpiricalResample, share(std::move(records)), seed);
  }

  static StreamSource synthetic(Generator generator, std::uint64_t seed) {
    StreamSource s(StreamMode::kSynthetic, nullptr, seed);
    s.generator_ = std::move(generator);
    return s;
  }

  StreamMode mode() const { return mode_; }
  bool finite() const { return mode_ == StreamMode::kOrdered || mode_ == StreamMode::kPermuted; }
  // Number of underlying records; 0 for synthetic streams.
  std::size_t dataset_size() const { return records_ ? records_->size() : 0; }
  // Training points handed out so far.
  std::uint64_t delivered() const { return delivered_; }

  // Up to `batch` points; an empty result means a finite stream is exhausted.
  std::vector<T> next_minibatch(std::size_t batch) {
    if (batch == 0) throw std::invalid_argument("minibatch size must be at least 1");
    std::vector<T> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (!lookahead_.empty()) {
        out.push_back(std::move(lookahead_.front()));
        lookahead_.pop_front();
      } else if (!exhausted()) {
        out.push_back(produce());
      } else {
        break;
      }
    }
    delivered_ += out.size();
    return out;
  }

  // The next `window` points without advancing the training cursor.
  std::vector<T> heldout_window(std::size_t window) {
    while (lookahead_.size() < window && !exhausted()) lookahead_.push_back(produce());
    const auto n = std::min(window, lookahead_.size());
    return std::vector<T>(lookahead_.begin(), lookahead_.begin() + static_cast<std::ptrdiff_t>(n));
  }

 private:
  StreamSource(StreamMode mode, std::shared_ptr<const std::vector<T>> records, std::uint64_t seed)
      : mode_(mode), records_(std::move(records)), rng_(seed) {}

  static std::shared_ptr<const std::vector<T>> share(std::vector<T> records) {
    return std::make_shared<const std::vector<T>>(std::move(records));
  }

  bool exhausted() const { return finite() && next_ >= records_->size(); }

  T produce() {
    switch (mode_) {
      case StreamMode::kOrdered:
        return (*records_)[next_++];
      case StreamMode::kPermuted:
        return (*records_)[order_[next_++]];
      case StreamMode::kEmpiricalResample: {
        std::uniform_int_distribution<std::size_t> pick(0, records_->size() - 1);
        return (*records_)[pick(rng_)];
      }
      case StreamMode::kSynthetic:
        return generator_(rng_);
    }
    throw std::logic_error("unknown stream mode");
  }

  StreamMode mode_;
  std::shared_ptr<const std::vector<T>> records_;
  std::vector<std::size_t> order_;
  std::size_t next_ = 0;
  std::uint64_t delivered_ = 0;
  std::mt19937_64 rng_;
  Generator generator_;
  std::deque<T> lookahead_;
};

// ---- file formats ----

// One document per line: whitespace-separated `word_id:count` pairs with
// ids in [0, vocab_size) and counts >= 1, each id at most once. Throws ParseError.
Document parse_corpus_line(std::string_view line, std::size_t vocab_size);

struct LocationRecord {
  std::string user_id;
  std::int64_t timestamp = 0;
  double lat = 0.0;
  double lon = 0.0;
};

// Seconds since the most recent Monday 00:00 UTC, divided by the week length.
double time_of_week(std::int64_t unix_seconds);

// `user_id,timestamp,lat,lon` with an integer Unix timestamp.
LocationRecord parse_location_record(std::string_view line);
// (lat, lon, time_of_week).
Observation parse_location_line(std::string_view line);
Observation to_observation(const LocationRecord& r);

inline constexpr std::string_view kLocationHeader = "user_id,timestamp,lat,lon";

std::vector<std::string> load_vocabulary(const std::filesystem::path& path);
// Throws IoError when unreadable and ParseError carrying the line number.
std::vector<Document> load_corpus(const std::filesystem::path& path, std::size_t vocab_size);
std::vector<LocationRecord> load_locations(const std::filesystem::path& path);

// Keeps a record only if its user's previously kept record is at least
// `min_gap_seconds` older. Input order is preserved.
std::vector<LocationRecord> downsample_by_user(const std::vector<LocationRecord>& records,
                                               std::int64_t min_gap_seconds);

// ---- synthetic generators ----

struct GaussianMixtureGenerator {
  std::vector<double> weights;
  // Row-major components x dim.
  std::vector<double> means;
  std::vector<double> stddev;

  std::size_t dim() const { return stddev.size(); }
  void validate() const;
  // Log density of the true mixture.
  double log_density(const Observation& x) const;
};

struct LdaGenerator {
  // Row-major topics x vocab, each row a probability vector.
  std::vector<double> topics;
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  double doc_alpha = 0.5;
  // Poisson mean of the document length; every document has at least one token.
  double mean_length = 50.0;

  // Topics drawn from a symmetric Dirichlet(topic_eta).
  static LdaGenerator random(std::size_t num_topics, std::size_t vocab_size, double topic_eta, double doc_alpha,
                             double mean_length, std::uint64_t seed);
  void validate() const;
};

StreamSource<Observation> synthesize_stream(const GaussianMixtureGenerator& spec, std::uint64_t seed);
StreamSource<Document> synthesize_stream(const LdaGenerator& spec, std::uint64_t seed);

}  // namespace popvb
