#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cws {

struct FeatureEntry {
  std::string id;
  std::string value;

  bool operator==(const FeatureEntry&) const = default;
};

// Ordered (template-id, value) pairs for one character position.
using FeatureVector = std::vector<FeatureEntry>;

// Per-position feature vectors of one sentence.
using SentenceFeatures = std::vector<FeatureVector>;

// Dump format: one line per position, TAB-separated `id=value` pairs,
// sentences separated by a blank line.
inline void dump_features(std::ostream& out, const std::vector<SentenceFeatures>& sentences) {
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s) out << '\n';
    for (const auto& fv : sentences[s]) {
      for (std::size_t k = 0; k < fv.size(); ++k) {
        if (k) out << '\t';
        out << fv[k].id << '=' << fv[k].value;
      }
      out << '\n';
    }
  }
}

}  // namespace cws
