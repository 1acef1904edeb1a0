#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace popvb {

struct WordCount {
  std::uint32_t id = 0;
  std::uint32_t count = 0;

  bool operator==(const WordCount&) const = default;
};

// Sparse bag of words: distinct ids in ascending order, each with a positive count.
class Document {
 public:
  Document() = default;

  // Sorts by id. Throws std::invalid_argument on a zero count or a repeated id.
  static Document from_counts(std::vector<WordCount> counts);

  std::span<const WordCount> words() const { return words_; }
  std::size_t distinct() const { return words_.size(); }
  std::uint64_t token_total() const { return token_total_; }
  bool empty() const { return words_.empty(); }
  std::uint32_t max_id() const { return words_.empty() ? 0 : words_.back().id; }

  bool operator==(const Document&) const = default;

 private:
  std::vector<WordCount> words_;
  std::uint64_t token_total_ = 0;
};

}  // namespace popvb
