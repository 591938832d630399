#pragma once

// Document-level statistics computed independently for every document:
// longest repeated n-grams (LNG labels), pseudo-KL divergence and PMI over
// within-sentence trigram position marginals, with rank-based binning.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cws/corpus.hpp"
#include "cws/feature_vector.hpp"

namespace cws {

struct LngList {
  std::string doc_id;
  std::set<std::u32string> sequences;
};

// Maximal n-grams (n >= 2, within sentences) that occur at least twice in the
// document. An n-gram can only be frequent if its (n-1)-prefix is, so levels
// are grown from the surviving positions of the previous level.
inline LngList extract_lng(const Document& doc) {
  struct Occurrence {
    std::uint32_t sentence;
    std::uint32_t start;
  };
  LngList out{doc.id, {}};

  std::vector<Occurrence> candidates;
  for (std::uint32_t s = 0; s < doc.sentences.size(); ++s) {
    const auto len = doc.sentences[s].size();
    for (std::uint32_t i = 0; i + 2 <= len; ++i) candidates.push_back({s, i});
  }

  std::unordered_set<std::u32string_view> previous_level;
  for (std::size_t n = 2; !candidates.empty(); ++n) {
    std::unordered_map<std::u32string_view, std::uint32_t> counts;
    for (const auto& occ : candidates) {
      std::u32string_view sent = doc.sentences[occ.sentence];
      ++counts[sent.substr(occ.start, n)];
    }
    std::unordered_set<std::u32string_view> level;
    for (const auto& [gram, count] : counts) {
      if (count >= 2) level.insert(gram);
    }
    // A survivor of length n-1 is non-maximal iff it prefixes or suffixes a
    // survivor of length n.
    for (auto gram : level) {
      previous_level.erase(gram.substr(0, n - 1));
      previous_level.erase(gram.substr(1));
    }
    for (auto gram : previous_level) out.sequences.emplace(gram);

    std::vector<Occurrence> next;
    for (const auto& occ : candidates) {
      std::u32string_view sent = doc.sentences[occ.sentence];
      if (level.count(sent.substr(occ.start, n)) && occ.start + n + 1 <= sent.size()) {
        next.push_back(occ);
      }
    }
    candidates = std::move(next);
    previous_level = std::move(level);
  }
  for (auto gram : previous_level) out.sequences.emplace(gram);
  return out;
}

enum class LngLabel : std::uint8_t { S, F, T, O };

inline char lng_label_char(LngLabel l) { return "SFTO"[static_cast<int>(l)]; }

class LngMatcher {
 public:
  explicit LngMatcher(const LngList& lng) {
    for (const auto& seq : lng.sequences) {
      if (seq.size() < 2) continue;
      heads_.insert(key(seq[0], seq[1]));
      tails_.insert(key(seq[seq.size() - 2], seq[seq.size() - 1]));
    }
  }

  LngLabel label(const Sentence& sent, std::size_t i) const {
    const bool starts = i + 1 < sent.size() && heads_.count(key(sent[i], sent[i + 1]));
    const bool finishes = i >= 1 && i < sent.size() && tails_.count(key(sent[i - 1], sent[i]));
    if (starts && finishes) return LngLabel::T;
    if (starts) return LngLabel::S;
    if (finishes) return LngLabel::F;
    return LngLabel::O;
  }

 private:
  static std::uint64_t key(Character a, Character b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::unordered_set<std::uint64_t> heads_;
  std::unordered_set<std::uint64_t> tails_;
};

inline LngLabel lng_label(const Document& doc, const LngList& lng, std::size_t sentence,
                          std::size_t i) {
  return LngMatcher(lng).label(doc.sentences.at(sentence), i);
}

struct TrigramTable {
  std::string doc_id;
  // Trigram types whose raw frequency is at least 2.
  std::unordered_map<std::u32string, std::size_t> counts;
  // marginals[p][c]: probability of character c at trigram position p+1.
  std::array<std::unordered_map<Character, double>, 3> marginals;
  // Joint probabilities for positions (1,2) and (1,3), keyed by character pair.
  std::unordered_map<std::uint64_t, double> joint12;
  std::unordered_map<std::uint64_t, double> joint13;
  std::size_t total_tokens = 0;

  static std::uint64_t pair_key(Character a, Character b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  bool contains(std::u32string_view trigram) const {
    return counts.count(std::u32string(trigram)) > 0;
  }
};

inline TrigramTable build_trigram_table(const Document& doc) {
  TrigramTable table;
  table.doc_id = doc.id;
  std::unordered_map<std::u32string, std::size_t> raw;
  for (const auto& sent : doc.sentences) {
    for (std::size_t i = 0; i + 3 <= sent.size(); ++i) ++raw[sent.substr(i, 3)];
  }
  for (auto& [gram, count] : raw) {
    if (count >= 2) table.counts.emplace(gram, count);
  }
  for (const auto& [gram, count] : table.counts) table.total_tokens += count;
  if (table.total_tokens == 0) return table;
  const double total = static_cast<double>(table.total_tokens);
  for (const auto& [gram, count] : table.counts) {
    const double p = static_cast<double>(count) / total;
    for (std::size_t k = 0; k < 3; ++k) table.marginals[k][gram[k]] += p;
    table.joint12[TrigramTable::pair_key(gram[0], gram[1])] += p;
    table.joint13[TrigramTable::pair_key(gram[0], gram[2])] += p;
  }
  return table;
}

// One optional score per character position, sentence-major.
using PositionScores = std::vector<std::vector<std::optional<double>>>;

struct PairScores {
  PositionScores adjacent;  // (C_i, C_{i+1})
  PositionScores skip;      // (C_i, C_{i+2})
};

namespace detail {

template <typename Formula>
PairScores score_trigram_starts(const Document& doc, const TrigramTable& table, Formula formula) {
  PairScores out;
  for (const auto& sent : doc.sentences) {
    std::vector<std::optional<double>> adjacent(sent.size()), skip(sent.size());
    for (std::size_t i = 0; i + 3 <= sent.size(); ++i) {
      if (!table.counts.count(sent.substr(i, 3))) continue;
      adjacent[i] = formula(sent[i], sent[i + 1], 1, table.joint12);
      skip[i] = formula(sent[i], sent[i + 2], 2, table.joint13);
    }
    out.adjacent.push_back(std::move(adjacent));
    out.skip.push_back(std::move(skip));
  }
  return out;
}

}  // namespace detail

inline PairScores compute_pkl(const Document& doc, const TrigramTable& table) {
  return detail::score_trigram_starts(
      doc, table,
      [&](Character first, Character other, std::size_t other_pos,
          const std::unordered_map<std::uint64_t, double>&) {
        const double p = table.marginals[0].at(first);
        const double q = table.marginals[other_pos].at(other);
        return p * std::log(p / q);
      });
}

inline PairScores compute_pkl(const Document& doc) { return compute_pkl(doc, build_trigram_table(doc)); }

inline PairScores compute_pmi(const Document& doc, const TrigramTable& table) {
  return detail::score_trigram_starts(
      doc, table,
      [&](Character first, Character other, std::size_t other_pos,
          const std::unordered_map<std::uint64_t, double>& joint) {
        const double p = table.marginals[0].at(first);
        const double q = table.marginals[other_pos].at(other);
        const double pq = joint.at(TrigramTable::pair_key(first, other));
        return std::log(pq / (p * q));
      });
}

inline PairScores compute_pmi(const Document& doc) { return compute_pmi(doc, build_trigram_table(doc)); }

enum class BinDirection { Ascending, Descending };

inline constexpr int kNumBins = 5;

// 1..5, or nullopt for a position without a score.
using BinnedScore = std::optional<int>;

// Equal-count binning by rank: sorted in `direction` (stable, so ties keep
// input order), split into five contiguous groups whose sizes differ by at
// most one with earlier groups taking the extra elements.
inline std::vector<BinnedScore> bin_scores(const std::vector<std::optional<double>>& scores,
                                           BinDirection direction) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return direction == BinDirection::Ascending ? *scores[a] < *scores[b]
                                                : *scores[a] > *scores[b];
  });
  std::vector<BinnedScore> bins(scores.size());
  const std::size_t n = order.size();
  const std::size_t base = n / kNumBins;
  const std::size_t extra = n % kNumBins;
  std::size_t rank = 0;
  for (int bin = 1; bin <= kNumBins; ++bin) {
    const std::size_t size = base + (static_cast<std::size_t>(bin) <= extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) bins[order[rank++]] = bin;
  }
  return bins;
}

// Bins a document's sentence-major scores as one population.
inline std::vector<std::vector<BinnedScore>> bin_document_scores(const PositionScores& scores,
                                                                 BinDirection direction) {
  std::vector<std::optional<double>> flat;
  for (const auto& s : scores) flat.insert(flat.end(), s.begin(), s.end());
  const auto binned = bin_scores(flat, direction);
  std::vector<std::vector<BinnedScore>> out;
  std::size_t k = 0;
  for (const auto& s : scores) {
    out.emplace_back(binned.begin() + static_cast<std::ptrdiff_t>(k),
                     binned.begin() + static_cast<std::ptrdiff_t>(k + s.size()));
    k += s.size();
  }
  return out;
}

inline std::string bin_value(const BinnedScore& b) { return b ? std::to_string(*b) : "none"; }

struct DocFeatureGroups {
  bool lng = false;
  bool pkl = false;
  bool pmi = false;

  bool any() const { return lng || pkl || pmi; }
};

// Emits LNG, PKL1, PKL2, PMI1, PMI2 entries (for the enabled groups) per
// position of every sentence of the document.
inline std::vector<SentenceFeatures> doc_features(const Document& doc, DocFeatureGroups groups) {
  std::vector<SentenceFeatures> out(doc.sentences.size());
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) out[s].resize(doc.sentences[s].size());
  if (!groups.any()) return out;

  if (groups.lng) {
    const LngMatcher matcher(extract_lng(doc));
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
        out[s][i].push_back({"LNG", std::string(1, lng_label_char(matcher.label(doc.sentences[s], i)))});
      }
    }
  }
  if (groups.pkl || groups.pmi) {
    const auto table = build_trigram_table(doc);
    const auto emit = [&](const PairScores& scores, BinDirection dir, const char* first_id,
                          const char* second_id) {
      const auto adjacent = bin_document_scores(scores.adjacent, dir);
      const auto skip = bin_document_scores(scores.skip, dir);
      for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
        for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
          out[s][i].push_back({first_id, bin_value(adjacent[s][i])});
          out[s][i].push_back({second_id, bin_value(skip[s][i])});
        }
      }
    };
    if (groups.pkl) emit(compute_pkl(doc, table), BinDirection::Ascending, "PKL1", "PKL2");
    if (groups.pmi) emit(compute_pmi(doc, table), BinDirection::Descending, "PMI1", "PMI2");
  }
  return out;
}

}  // namespace cws
