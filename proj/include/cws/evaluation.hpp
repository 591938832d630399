#pragma once

// Span-matching segmentation scores (micro-averaged), OOV recall against a
// reference vocabulary, and the learning-curve runner.

#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cws/adaptation.hpp"

namespace cws {

struct SegCounts {
  std::size_t gold_words = 0;
  std::size_t predicted_words = 0;
  std::size_t correct_words = 0;
  std::size_t gold_oov = 0;
  std::size_t correct_oov = 0;

  SegCounts& operator+=(const SegCounts& o) {
    gold_words += o.gold_words;
    predicted_words += o.predicted_words;
    correct_words += o.correct_words;
    gold_oov += o.gold_oov;
    correct_oov += o.correct_oov;
    return *this;
  }
};

struct SegScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> oov_recall;
  SegCounts counts;

  static SegScore from_counts(const SegCounts& c) {
    SegScore s;
    s.counts = c;
    s.precision = c.predicted_words ? static_cast<double>(c.correct_words) / static_cast<double>(c.predicted_words) : 0.0;
    s.recall = c.gold_words ? static_cast<double>(c.correct_words) / static_cast<double>(c.gold_words) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (c.gold_oov) s.oov_recall = static_cast<double>(c.correct_oov) / static_cast<double>(c.gold_oov);
    return s;
  }
};

using Vocabulary = std::unordered_set<std::u32string>;

namespace detail {

inline std::vector<std::pair<std::size_t, std::size_t>> spans(const SegmentedSentence& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t pos = 0;
  for (const auto& w : s.words) {
    out.emplace_back(pos, pos + w.size());
    pos += w.size();
  }
  return out;
}

}  // namespace detail

// Counts for one sentence pair. `vocab` may be null (no OOV accounting).
inline SegCounts score_sentence(const SegmentedSentence& gold, const SegmentedSentence& pred,
                                const Vocabulary* vocab) {
  if (gold.text() != pred.text()) {
    throw Error(ErrorCategory::Mismatch, "gold and predicted sentences cover different characters");
  }
  SegCounts c;
  const auto g = detail::spans(gold);
  const auto p = detail::spans(pred);
  c.gold_words = g.size();
  c.predicted_words = p.size();
  const std::set<std::pair<std::size_t, std::size_t>> predicted(p.begin(), p.end());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const bool hit = predicted.count(g[k]) > 0;
    c.correct_words += hit;
    if (vocab && !vocab->count(gold.words[k])) {
      ++c.gold_oov;
      c.correct_oov += hit;
    }
  }
  return c;
}

inline SegScore score(const std::vector<SegmentedSentence>& gold,
                      const std::vector<SegmentedSentence>& pred, const Vocabulary* vocab) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCategory::Mismatch, "gold has " + std::to_string(gold.size()) +
                                             " sentences, prediction has " + std::to_string(pred.size()));
  }
  SegCounts total;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    try {
      total += score_sentence(gold[s], pred[s], vocab);
    } catch (const Error& e) {
      throw Error(e.category(), "sentence " + std::to_string(s + 1) + ": " + e.what());
    }
  }
  return SegScore::from_counts(total);
}

// Scores aligned corpora document by document (matched by id).
inline SegScore score_corpus(const Corpus& gold, const Corpus& pred, const Vocabulary* vocab) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCategory::Mismatch, "gold has " + std::to_string(gold.size()) +
                                             " documents, prediction has " + std::to_string(pred.size()));
  }
  SegCounts total;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const auto& g = gold[d];
    const auto& p = pred[d];
    if (g.id != p.id) {
      throw Error(ErrorCategory::Mismatch, "document order differs: '" + g.id + "' vs '" + p.id + "'");
    }
    if (g.segmented.size() != p.segmented.size()) {
      throw Error(ErrorCategory::Mismatch, "document '" + g.id + "': sentence counts differ");
    }
    for (std::size_t s = 0; s < g.segmented.size(); ++s) {
      if (g.sentences[s] != p.sentences[s]) {
        throw Error(ErrorCategory::Mismatch, "document '" + g.id + "' line " +
                                                 std::to_string(g.lines[s]) +
                                                 ": characters differ between gold and prediction");
      }
      total += score_sentence(g.segmented[s], p.segmented[s], vocab);
    }
  }
  return SegScore::from_counts(total);
}

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

inline std::string format_oov(const std::optional<double>& v) {
  return v ? format_percent(*v) : "n/a";
}

struct CurvePoint {
  std::size_t size = 0;  // requested target word count
  AdaptationMode mode = AdaptationMode::Target;
  SegScore score;
};

struct CurveSetup {
  const Corpus* source = nullptr;
  const Corpus* target_train = nullptr;
  const Corpus* target_dev = nullptr;
  std::vector<std::size_t> sizes;
  std::vector<AdaptationMode> modes;
  FeatureContext features;
  CrfConfig crf;
};

// Segments every document of `corpus` with `model` and scores it against the
// corpus's own gold segmentation.
inline SegScore evaluate_model(const AdaptedModel& model, const Corpus& corpus,
                               const FeatureContext& ctx, const Vocabulary* vocab) {
  SegCounts total;
  for (const auto& doc : corpus) {
    const auto pred = model.segment(doc, ctx);
    for (std::size_t s = 0; s < pred.size(); ++s) total += score_sentence(doc.segmented[s], pred[s], vocab);
  }
  return SegScore::from_counts(total);
}

inline void sort_curve(std::vector<CurvePoint>& points) {
  std::stable_sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return std::pair(static_cast<int>(a.mode), a.size) < std::pair(static_cast<int>(b.mode), b.size);
  });
}

// One point per (size, mode); the reference vocabulary for OOV recall is the
// source corpus's word types.
inline std::vector<CurvePoint> run_curve(const CurveSetup& setup) {
  if (!setup.target_train || !setup.target_dev) {
    throw Error(ErrorCategory::Config, "curve: target train and dev corpora are required");
  }
  const auto slices = slice_target(*setup.target_train, setup.sizes);
  Vocabulary vocab;
  if (setup.source) vocab = vocabulary(*setup.source);
  std::vector<CurvePoint> points;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    for (auto mode : setup.modes) {
      try {
        const auto model = train_adapted(mode, setup.source, slices[k], setup.features, setup.crf);
        points.push_back({setup.sizes[k], mode,
                          evaluate_model(model, *setup.target_dev, setup.features,
                                         setup.source ? &vocab : nullptr)});
      } catch (const Error& e) {
        throw Error(e.category(), "curve cell (mode=" + std::string(mode_name(mode)) +
                                      ", size=" + std::to_string(setup.sizes[k]) + "): " + e.what());
      }
    }
  }
  sort_curve(points);
  return points;
}

inline constexpr std::string_view kCurveHeader = "mode,size,precision,recall,f1,oov_recall";

inline std::string curve_report(std::vector<CurvePoint> points) {
  sort_curve(points);
  std::string out(kCurveHeader);
  out += '\n';
  for (const auto& p : points) {
    out += std::string(mode_name(p.mode)) + ',' + std::to_string(p.size) + ',' +
           format_percent(p.score.precision) + ',' + format_percent(p.score.recall) + ',' +
           format_percent(p.score.f1) + ',' + format_oov(p.score.oov_recall) + '\n';
  }
  return out;
}

// Whitespace-separated plot data: one row per size, one f1 column per mode.
inline std::string curve_plot_data(const std::vector<CurvePoint>& points) {
  std::vector<AdaptationMode> modes;
  std::vector<std::size_t> sizes;
  for (const auto& p : points) {
    if (std::find(modes.begin(), modes.end(), p.mode) == modes.end()) modes.push_back(p.mode);
    if (std::find(sizes.begin(), sizes.end(), p.size) == sizes.end()) sizes.push_back(p.size);
  }
  std::sort(modes.begin(), modes.end());
  std::sort(sizes.begin(), sizes.end());
  std::string out = "# size";
  for (auto m : modes) out += ' ' + std::string(mode_name(m));
  out += '\n';
  for (auto size : sizes) {
    out += std::to_string(size);
    for (auto m : modes) {
      const auto it = std::find_if(points.begin(), points.end(),
                                   [&](const CurvePoint& p) { return p.mode == m && p.size == size; });
      out += ' ' + (it == points.end() ? std::string("nan") : format_percent(it->score.f1));
    }
    out += '\n';
  }
  return out;
}

}  // namespace cws
