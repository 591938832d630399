#pragma once

// Baseline character templates: character unigrams/bigrams in a five-character
// window plus character-type n-grams around the target position.

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "cws/corpus.hpp"
#include "cws/feature_vector.hpp"

namespace cws {

// Value used for any window slot that falls off the sentence.
inline constexpr std::string_view kBoundary = "<BND>";

inline constexpr std::array<std::string_view, 14> kCharTemplateIds = {
    "U[-2]",    "U[-1]",   "U[0]",    "U[1]",     "U[2]",  "B[-2,-1]", "B[-1,0]",
    "B[0,1]",   "B[1,2]",  "S[-1,1]", "TU[0]",    "TB[-1,0]", "TB[0,1]", "TS[-1,1]"};

inline constexpr std::size_t kCharNgramTemplates = 10;
inline constexpr std::size_t kTypeNgramTemplates = 4;

namespace detail {

inline std::string char_at(const Sentence& sent, std::ptrdiff_t k) {
  if (k < 0 || k >= static_cast<std::ptrdiff_t>(sent.size())) return std::string(kBoundary);
  return utf8::encode(sent[static_cast<std::size_t>(k)]);
}

inline std::string type_at(std::span<const CharType> types, std::ptrdiff_t k) {
  if (k < 0 || k >= static_cast<std::ptrdiff_t>(types.size())) return std::string(kBoundary);
  return std::string(char_type_name(types[static_cast<std::size_t>(k)]));
}

}  // namespace detail

inline FeatureVector cf_features(const Sentence& sent, std::span<const CharType> types,
                                 std::size_t i) {
  if (i >= sent.size() || types.size() != sent.size()) {
    throw Error(ErrorCategory::Precondition,
                "cf_features: position " + std::to_string(i) + " outside sentence of length " +
                    std::to_string(sent.size()));
  }
  const auto p = static_cast<std::ptrdiff_t>(i);
  std::array<std::string, 5> c;
  std::array<std::string, 3> t;
  for (std::ptrdiff_t d = -2; d <= 2; ++d) c[static_cast<std::size_t>(d + 2)] = detail::char_at(sent, p + d);
  for (std::ptrdiff_t d = -1; d <= 1; ++d) t[static_cast<std::size_t>(d + 1)] = detail::type_at(types, p + d);

  const std::string dot = "·";
  FeatureVector fv;
  fv.reserve(kCharTemplateIds.size());
  const auto add = [&](std::size_t k, std::string v) {
    fv.push_back({std::string(kCharTemplateIds[k]), std::move(v)});
  };
  for (std::size_t k = 0; k < 5; ++k) add(k, c[k]);
  for (std::size_t k = 0; k < 4; ++k) add(5 + k, c[k] + c[k + 1]);
  add(9, c[1] + c[3]);
  add(10, t[1]);
  add(11, t[0] + dot + t[1]);
  add(12, t[1] + dot + t[2]);
  add(13, t[0] + dot + t[2]);
  return fv;
}

inline SentenceFeatures cf_sentence_features(const Sentence& sent) {
  const auto types = classify_sentence(sent);
  SentenceFeatures out;
  out.reserve(sent.size());
  for (std::size_t i = 0; i < sent.size(); ++i) out.push_back(cf_features(sent, types, i));
  return out;
}

}  // namespace cws
