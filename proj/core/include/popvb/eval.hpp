#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "popvb/dpmix.hpp"
#include "popvb/engine.hpp"
#include "popvb/lda.hpp"
#include "popvb/score.hpp"

namespace popvb {

// Expands the document into tokens in word-id order, permutes token positions
// with a seeded shuffle and deals them alternately to the two halves. Returns
// nullopt for documents with fewer than two tokens.
std::optional<std::pair<Document, Document>> split_half(const Document& doc, std::uint64_t seed);
// Same dealing with an explicit permutation of token positions.
std::pair<Document, Document> split_half_with_order(const Document& doc, std::span<const std::size_t> order);

// Per-datum held-out score; nullopt marks a skipped datum.
std::optional<PredictiveScore> heldout_score(const LdaModel& model, const LdaGlobalState& global, const Document& doc,
                                             std::uint64_t seed);
std::optional<PredictiveScore> heldout_score(const DpGaussianMixture& model, const DpGlobalState& global,
                                             const Observation& obs, std::uint64_t seed);
std::optional<PredictiveScore> heldout_score(const DpTextMixture& model, const DpGlobalState& global,
                                             const Document& doc, std::uint64_t seed);

struct WindowScore {
  double heldout_avg_ll = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  bool valid = false;
};

// Mean held-out log likelihood over a window. By default each datum's
// per-unit average is averaged over data; `pooled` divides total nats by total
// units instead. Scores are summed in sorted order so the result does not
// depend on window order.
template <typename M>
WindowScore evaluate_window(const M& model, const typename M::Global& global, std::span<const typename M::Datum> window,
                            std::uint64_t seed, bool pooled = false) {
  WindowScore out;
  std::vector<double> values;
  std::uint64_t units = 0;
  for (const auto& x : window) {
    const auto s = heldout_score(model, global, x, seed);
    if (!s || s->count == 0) {
      ++out.skipped;
      continue;
    }
    values.push_back(pooled ? s->log_lik : s->average());
    units += s->count;
  }
  out.scored = values.size();
  if (values.empty()) {
    out.heldout_avg_ll = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  out.heldout_avg_ll = total / static_cast<double>(pooled ? units : values.size());
  out.valid = true;
  return out;
}

struct MetricsRecord {
  std::uint64_t iteration = 0;
  std::uint64_t data_seen = 0;
  double heldout_avg_ll = 0.0;
  std::optional<double> felbo_estimate;
  double wall_clock_seconds = 0.0;
  double alpha = 0.0;
  Algorithm algorithm = Algorithm::kPopVB;
  // False when the held-out window was empty after skips.
  bool valid = true;
};

struct RunSummary {
  double final_heldout_avg_ll = 0.0;
  double best_heldout_avg_ll = 0.0;
  std::size_t best_index = 0;
  std::vector<MetricsRecord> series;
};

// Final and best over valid records (NaN when none are valid). Throws on an empty list.
RunSummary aggregate_run(std::span<const MetricsRecord> records);

inline constexpr std::string_view kMetricsHeader = "iteration,data_seen,heldout_avg_ll,felbo,seconds,alpha,algorithm";

// printf-style %.17g.
std::string format_real(double value);
std::string to_csv_row(const MetricsRecord& record);

}  // namespace popvb
