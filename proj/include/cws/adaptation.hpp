#pragma once

// Training regimes over a source corpus S and a target corpus T:
//   target  - T only
//   all     - S and T concatenated
//   transit - a model trained on S labels T; its prediction is one extra feature
//   easy    - feature augmentation into common / source-only / target-only blocks

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cws/crf.hpp"
#include "cws/features.hpp"

namespace cws {

enum class DomainTag { Source, Target };

inline std::string_view domain_name(DomainTag d) {
  return d == DomainTag::Source ? "source" : "target";
}

inline constexpr std::string_view kCommonPrefix = "COM:";
inline constexpr std::string_view kTransitTemplate = "TRANSIT";

// Each entry (id, v) becomes ("COM:"+id, v) and (domain+":"+id, v); the
// all-zero third block stays implicit.
inline FeatureVector augment(const FeatureVector& fv, DomainTag d) {
  FeatureVector out;
  out.reserve(fv.size() * 2);
  const std::string prefix = std::string(domain_name(d)) + ":";
  for (const auto& e : fv) {
    out.push_back({std::string(kCommonPrefix) + e.id, e.value});
    out.push_back({prefix + e.id, e.value});
  }
  return out;
}

inline SentenceFeatures augment(const SentenceFeatures& sf, DomainTag d) {
  SentenceFeatures out;
  out.reserve(sf.size());
  for (const auto& fv : sf) out.push_back(augment(fv, d));
  return out;
}

// Dense view of an augmented vector over `template_ids` tripled into common,
// source and target blocks; absent slots read as "0".
inline std::vector<std::string> materialize_dense(const FeatureVector& augmented,
                                                  const std::vector<std::string>& template_ids) {
  const std::array<std::string, 3> prefixes = {std::string(kCommonPrefix), "source:", "target:"};
  std::vector<std::string> dense(template_ids.size() * 3, "0");
  for (const auto& e : augmented) {
    for (std::size_t b = 0; b < 3; ++b) {
      if (e.id.rfind(prefixes[b], 0) != 0) continue;
      const auto id = e.id.substr(prefixes[b].size());
      for (std::size_t t = 0; t < template_ids.size(); ++t) {
        if (template_ids[t] == id) dense[b * template_ids.size() + t] = e.value;
      }
    }
  }
  return dense;
}

enum class AdaptationMode { Target, All, Transit, Easy };

inline constexpr std::array<AdaptationMode, 4> kAllModes = {
    AdaptationMode::Target, AdaptationMode::All, AdaptationMode::Transit, AdaptationMode::Easy};

inline std::string_view mode_name(AdaptationMode m) {
  static constexpr std::array<std::string_view, 4> names = {"target", "all", "transit", "easy"};
  return names[static_cast<std::size_t>(m)];
}

inline AdaptationMode parse_mode(std::string_view name) {
  for (auto m : kAllModes) {
    if (mode_name(m) == name) return m;
  }
  throw Error(ErrorCategory::Config, "unknown adaptation mode '" + std::string(name) + "'");
}

inline bool mode_needs_source(AdaptationMode m) { return m != AdaptationMode::Target; }

struct FeatureContext {
  FeatureGroups groups;
  const KnowledgeBase* knowledge = nullptr;
};

// Features and gold labels for every sentence of a segmented corpus.
inline std::vector<TrainingInstance> corpus_instances(const Corpus& corpus,
                                                      const FeatureContext& ctx) {
  std::vector<TrainingInstance> out;
  for (const auto& doc : corpus) {
    if (!doc.is_segmented()) {
      throw Error(ErrorCategory::Precondition, "training document '" + doc.id + "' is not segmented");
    }
    auto feats = document_features(doc, ctx.groups, ctx.knowledge);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      out.push_back({doc.id + ":" + std::to_string(doc.lines[s]), std::move(feats[s]),
                     encode_bmes(doc.segmented[s])});
    }
  }
  return out;
}

inline void add_transit_feature(SentenceFeatures& feats, const LabeledSequence& predicted) {
  for (std::size_t i = 0; i < feats.size(); ++i) {
    feats[i].push_back({std::string(kTransitTemplate), std::string(1, label_char(predicted[i]))});
  }
}

struct AdaptedModel {
  AdaptationMode mode = AdaptationMode::Target;
  CrfModel model;
  // Only for transit: the source-trained model whose predictions feed `model`.
  std::optional<CrfModel> source_model;

  // Final-model features of a document, per sentence, as seen at decode time.
  std::vector<SentenceFeatures> decode_features(const Document& doc, const FeatureContext& ctx) const {
    auto feats = document_features(doc, ctx.groups, ctx.knowledge);
    for (auto& sf : feats) {
      if (mode == AdaptationMode::Transit) {
        add_transit_feature(sf, source_model->viterbi(sf));
      } else if (mode == AdaptationMode::Easy) {
        sf = augment(sf, DomainTag::Target);
      }
    }
    return feats;
  }

  std::vector<SegmentedSentence> segment(const Document& doc, const FeatureContext& ctx) const {
    const auto feats = decode_features(doc, ctx);
    std::vector<SegmentedSentence> out;
    out.reserve(feats.size());
    for (std::size_t s = 0; s < feats.size(); ++s) {
      out.push_back(decode_bmes(doc.sentences[s], model.viterbi(feats[s])));
    }
    return out;
  }
};

struct TrainingSet {
  std::vector<TrainingInstance> instances;
  std::optional<CrfModel> source_model;
};

inline TrainingSet build_training(AdaptationMode mode, const Corpus* source, const Corpus& target,
                                  const FeatureContext& ctx, const CrfConfig& config) {
  if (target.empty()) throw Error(ErrorCategory::Precondition, "target corpus is empty");
  if (mode_needs_source(mode) && (source == nullptr || source->empty())) {
    throw Error(ErrorCategory::Config,
                "mode '" + std::string(mode_name(mode)) + "' requires a source corpus");
  }
  TrainingSet out;
  switch (mode) {
    case AdaptationMode::Target:
      out.instances = corpus_instances(target, ctx);
      break;
    case AdaptationMode::All: {
      out.instances = corpus_instances(*source, ctx);
      auto t = corpus_instances(target, ctx);
      out.instances.insert(out.instances.end(), std::make_move_iterator(t.begin()),
                           std::make_move_iterator(t.end()));
      break;
    }
    case AdaptationMode::Transit: {
      const auto source_instances = corpus_instances(*source, ctx);
      out.source_model = train_crf(source_instances, config).model;
      out.instances = corpus_instances(target, ctx);
      for (auto& inst : out.instances) {
        add_transit_feature(inst.features, out.source_model->viterbi(inst.features));
      }
      break;
    }
    case AdaptationMode::Easy: {
      out.instances = corpus_instances(*source, ctx);
      for (auto& inst : out.instances) inst.features = augment(inst.features, DomainTag::Source);
      auto t = corpus_instances(target, ctx);
      for (auto& inst : t) {
        inst.features = augment(inst.features, DomainTag::Target);
        out.instances.push_back(std::move(inst));
      }
      break;
    }
  }
  return out;
}

inline AdaptedModel train_adapted(AdaptationMode mode, const Corpus* source, const Corpus& target,
                                  const FeatureContext& ctx, const CrfConfig& config) {
  auto set = build_training(mode, source, target, ctx, config);
  AdaptedModel out;
  out.mode = mode;
  out.model = train_crf(set.instances, config).model;
  out.source_model = std::move(set.source_model);
  return out;
}

// Document-granular nested prefixes of `target`: each requested word count is
// met by the shortest prefix whose cumulative word count reaches it.
inline std::vector<Corpus> slice_target(const Corpus& target, const std::vector<std::size_t>& sizes) {
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    if (sizes[k] < sizes[k - 1]) throw Error(ErrorCategory::Precondition, "slice sizes must ascend");
  }
  const std::size_t total = corpus_word_count(target);
  if (!sizes.empty() && sizes.back() > total) {
    throw Error(ErrorCategory::Precondition, "slice size " + std::to_string(sizes.back()) +
                                                 " exceeds target word count " + std::to_string(total));
  }
  std::vector<Corpus> out;
  std::size_t docs = 0, words = 0;
  for (auto size : sizes) {
    while (words < size && docs < target.size()) words += target[docs++].word_count();
    out.emplace_back(target.begin(), target.begin() + static_cast<std::ptrdiff_t>(docs));
  }
  return out;
}

}  // namespace cws
