#pragma once

// Assembles the per-position feature vector of every enabled feature group.

#include <array>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cws/char_features.hpp"
#include "cws/doc_features.hpp"
#include "cws/external_features.hpp"

namespace cws {

enum class FeatureGroup { CF, LNG, PKL, PMI, CPOS, DICT, SIM };

inline constexpr std::array<FeatureGroup, 7> kAllFeatureGroups = {
    FeatureGroup::CF,   FeatureGroup::LNG,  FeatureGroup::PKL, FeatureGroup::PMI,
    FeatureGroup::CPOS, FeatureGroup::DICT, FeatureGroup::SIM};

inline std::string_view feature_group_name(FeatureGroup g) {
  static constexpr std::array<std::string_view, 7> names = {"CF",    "LNG",  "PKL", "PMI",
                                                            "C_POS", "DICT", "SIM"};
  return names[static_cast<std::size_t>(g)];
}

struct FeatureGroups {
  std::array<bool, 7> enabled{true, false, false, false, false, false, false};

  bool has(FeatureGroup g) const { return enabled[static_cast<std::size_t>(g)]; }
  void set(FeatureGroup g, bool on = true) { enabled[static_cast<std::size_t>(g)] = on; }

  bool needs_knowledge() const {
    return has(FeatureGroup::CPOS) || has(FeatureGroup::DICT) || has(FeatureGroup::SIM);
  }

  DocFeatureGroups doc_groups() const {
    return {has(FeatureGroup::LNG), has(FeatureGroup::PKL), has(FeatureGroup::PMI)};
  }
  ExternalFeatureGroups external_groups() const {
    return {has(FeatureGroup::CPOS), has(FeatureGroup::DICT), has(FeatureGroup::SIM)};
  }

  static FeatureGroups all() {
    FeatureGroups g;
    g.enabled.fill(true);
    return g;
  }

  // Accepts a '+' or ',' separated list such as "CF+LNG+PMI+PKL" (case
  // insensitive; "Dict", "Sim" and "CPOS" spellings accepted).
  static FeatureGroups parse(std::string_view text) {
    FeatureGroups g;
    g.enabled.fill(false);
    std::string token;
    const auto flush = [&] {
      if (token.empty()) return;
      std::string upper;
      for (char c : token) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      if (upper == "CPOS") upper = "C_POS";
      bool found = false;
      for (auto grp : kAllFeatureGroups) {
        if (feature_group_name(grp) == upper) {
          g.set(grp);
          found = true;
        }
      }
      if (!found) throw Error(ErrorCategory::Config, "unknown feature group '" + token + "'");
      token.clear();
    };
    for (char c : text) {
      if (c == '+' || c == ',') {
        flush();
      } else if (c != ' ') {
        token.push_back(c);
      }
    }
    flush();
    if (!g.has(FeatureGroup::CF)) {
      throw Error(ErrorCategory::Config, "feature group CF must always be enabled");
    }
    return g;
  }

  std::string to_string() const {
    std::string out;
    for (auto grp : kAllFeatureGroups) {
      if (!has(grp)) continue;
      if (!out.empty()) out += '+';
      out += feature_group_name(grp);
    }
    return out;
  }

  bool operator==(const FeatureGroups&) const = default;
};

// Features of every sentence of a document. Order per position: the 14
// character templates, then LNG, PKL1/2, PMI1/2, C_POS, DICT, SIM[...].
inline std::vector<SentenceFeatures> document_features(const Document& doc,
                                                       const FeatureGroups& groups,
                                                       const KnowledgeBase* kb) {
  if (groups.needs_knowledge() && kb == nullptr) {
    throw Error(ErrorCategory::Config, "knowledge archive required for C_POS/DICT/SIM features");
  }
  std::vector<SentenceFeatures> out;
  out.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences) out.push_back(cf_sentence_features(sent));

  const auto append = [](std::vector<SentenceFeatures>& into, std::size_t s,
                         const SentenceFeatures& extra) {
    for (std::size_t i = 0; i < extra.size(); ++i) {
      into[s][i].insert(into[s][i].end(), extra[i].begin(), extra[i].end());
    }
  };
  if (groups.doc_groups().any()) {
    const auto doc_feats = doc_features(doc, groups.doc_groups());
    for (std::size_t s = 0; s < out.size(); ++s) append(out, s, doc_feats[s]);
  }
  if (groups.external_groups().any()) {
    for (std::size_t s = 0; s < out.size(); ++s) {
      append(out, s, external_features(*kb, doc.sentences[s], groups.external_groups()));
    }
  }
  return out;
}

}  // namespace cws
