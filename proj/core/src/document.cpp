#include "popvb/document.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace popvb {

Document Document::from_counts(std::vector<WordCount> counts) {
  std::sort(counts.begin(), counts.end(), [](const WordCount& a, const WordCount& b) { return a.id < b.id; });
  Document doc;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].count == 0) {
      throw std::invalid_argument("word " + std::to_string(counts[i].id) + " has a zero count");
    }
    if (i > 0 && counts[i].id == counts[i - 1].id) {
      throw std::invalid_argument("word " + std::to_string(counts[i].id) + " appears twice");
    }
    doc.token_total_ += counts[i].count;
  }
  doc.words_ = std::move(counts);
  return doc;
}

}  // namespace popvb
