#include "popvb/eval.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace popvb {

namespace {

Document from_tokens(std::vector<std::uint32_t> tokens) {
  std::sort(tokens.begin(), tokens.end());
  std::vector<WordCount> counts;
  for (auto w : tokens) {
    if (!counts.empty() && counts.back().id == w) {
      ++counts.back().count;
    } else {
      counts.push_back({w, 1});
    }
  }
  return Document::from_counts(std::move(counts));
}

}  // namespace

std::pair<Document, Document> split_half_with_order(const Document& doc, std::span<const std::size_t> order) {
  std::vector<std::uint32_t> tokens;
  tokens.reserve(doc.token_total());
  for (const auto& wc : doc.words()) tokens.insert(tokens.end(), wc.count, wc.id);
  if (order.size() != tokens.size()) throw std::invalid_argument("split order must cover every token");
  std::vector<bool> used(tokens.size(), false);
  std::vector<std::uint32_t> first;
  std::vector<std::uint32_t> second;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t pos = order[i];
    if (pos >= tokens.size() || used[pos]) throw std::invalid_argument("split order is not a permutation");
    used[pos] = true;
    (i % 2 == 0 ? first : second).push_back(tokens[pos]);
  }
  return {from_tokens(std::move(first)), from_tokens(std::move(second))};
}

std::optional<std::pair<Document, Document>> split_half(const Document& doc, std::uint64_t seed) {
  if (doc.token_total() < 2) return std::nullopt;
  std::vector<std::size_t> order(doc.token_total());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return split_half_with_order(doc, order);
}

std::optional<PredictiveScore> heldout_score(const LdaModel& model, const LdaGlobalState& global, const Document& doc,
                                             std::uint64_t seed) {
  auto halves = split_half(doc, seed);
  if (!halves) return std::nullopt;
  return lda_predictive(halves->first, halves->second, global, model.spec());
}

std::optional<PredictiveScore> heldout_score(const DpGaussianMixture& model, const DpGlobalState& global,
                                             const Observation& obs, std::uint64_t) {
  if (obs.size() != model.spec().obs_dim()) return std::nullopt;
  for (double v : obs) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return PredictiveScore{dp_predictive_log_lik(obs, global, model.spec()), 1};
}

std::optional<PredictiveScore> heldout_score(const DpTextMixture& model, const DpGlobalState& global,
                                             const Document& doc, std::uint64_t seed) {
  auto halves = split_half(doc, seed);
  if (!halves) return std::nullopt;
  return dp_text_predictive(halves->first, halves->second, global, model.spec());
}

RunSummary aggregate_run(std::span<const MetricsRecord> records) {
  if (records.empty()) throw std::invalid_argument("aggregate_run needs at least one record");
  RunSummary s;
  s.series.assign(records.begin(), records.end());
  s.final_heldout_avg_ll = std::numeric_limits<double>::quiet_NaN();
  s.best_heldout_avg_ll = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.valid || std::isnan(r.heldout_avg_ll)) continue;
    s.final_heldout_avg_ll = r.heldout_avg_ll;
    if (std::isnan(s.best_heldout_avg_ll) || r.heldout_avg_ll > s.best_heldout_avg_ll) {
      s.best_heldout_avg_ll = r.heldout_avg_ll;
      s.best_index = i;
    }
  }
  return s;
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string to_csv_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.iteration) + "," + std::to_string(r.data_seen) + ",";
  row += r.valid ? format_real(r.heldout_avg_ll) : std::string("nan");
  row += ",";
  if (r.felbo_estimate) row += format_real(*r.felbo_estimate);
  row += "," + format_real(r.wall_clock_seconds) + "," + format_real(r.alpha) + "," + to_string(r.algorithm);
  return row;
}

}  // namespace popvb
