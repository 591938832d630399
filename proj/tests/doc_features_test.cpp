#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cws/doc_features.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

namespace cws {
namespace {

using testing::make_document;
using testing::oracle_lng;
using testing::oracle_trigrams;
using testing::random_document;
using testing::u32;

TEST(ExtractLng, Examples) {
  EXPECT_EQ(extract_lng(make_document("d", {"abcd", "abcd"})).sequences,
            (std::set<std::u32string>{U"abcd"}));
  EXPECT_EQ(extract_lng(make_document("d", {"abx", "aby", "ab"})).sequences,
            (std::set<std::u32string>{U"ab"}));
  EXPECT_TRUE(extract_lng(make_document("d", {"地板很好大"})).sequences.empty());
}

TEST(ExtractLng, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> alpha(3, 20), size(5, 300);
  for (int trial = 0; trial < 300; ++trial) {
    const auto doc = random_document(rng, alpha(rng), size(rng));
    const auto lng = extract_lng(doc).sequences;
    ASSERT_EQ(lng, oracle_lng(doc)) << "trial " << trial;
    for (const auto& a : lng) {
      ASSERT_GE(a.size(), 2u);
      for (const auto& b : lng) {
        if (a != b) ASSERT_EQ(b.find(a), std::u32string::npos);
      }
    }
  }
}

TEST(ExtractLng, NeverCrossesSentenceBoundaries) {
  // "ab" ends one sentence and starts the next, but "bab" must not appear.
  const auto lng = extract_lng(make_document("d", {"xab", "abz"})).sequences;
  EXPECT_EQ(lng, (std::set<std::u32string>{U"ab"}));
}

TEST(LngLabel, MixedScriptSequence) {
  LngList lng{"A", {u32("a—干扰素")}};
  const auto doc = make_document("A", {"用a—干扰素治疗", "用ab治疗"});
  EXPECT_EQ(lng_label(doc, lng, 0, 1), LngLabel::S);
  EXPECT_EQ(lng_label(doc, lng, 1, 1), LngLabel::O);
}

TEST(LngLabel, StartAndFinishOfTwoCharacterSequence) {
  LngList lng{"d", {U"ab"}};
  const auto doc = make_document("d", {"aab"});
  EXPECT_EQ(lng_label(doc, lng, 0, 0), LngLabel::O);
  EXPECT_EQ(lng_label(doc, lng, 0, 1), LngLabel::S);
  EXPECT_EQ(lng_label(doc, lng, 0, 2), LngLabel::F);
}

TEST(LngLabel, BothConditionsGiveT) {
  LngList lng{"d", {U"ab", U"ba"}};
  const auto doc = make_document("d", {"aba"});
  EXPECT_EQ(lng_label(doc, lng, 0, 1), LngLabel::T);
}

TEST(LngLabel, EnumeratedPrefixSuffixRule) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto doc = random_document(rng, 4, 120);
    const auto lng = extract_lng(doc);
    const LngMatcher matcher(lng);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const auto& sent = doc.sentences[s];
      for (std::size_t i = 0; i < sent.size(); ++i) {
        bool starts = false, finishes = false;
        for (const auto& seq : lng.sequences) {
          starts |= i + 1 < sent.size() && seq.substr(0, 2) == sent.substr(i, 2);
          finishes |= i >= 1 && seq.substr(seq.size() - 2) == sent.substr(i - 1, 2);
        }
        const auto expected = starts && finishes ? LngLabel::T
                              : starts          ? LngLabel::S
                              : finishes        ? LngLabel::F
                                                : LngLabel::O;
        ASSERT_EQ(matcher.label(sent, i), expected);
      }
    }
  }
}

TEST(TrigramTable, MarginalsSumToOneAndFilterApplies) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto doc = random_document(rng, 3, 200);
    const auto table = build_trigram_table(doc);
    for (const auto& [g, c] : table.counts) ASSERT_GE(c, 2u);
    if (table.total_tokens == 0) continue;
    for (const auto& m : table.marginals) {
      double sum = 0.0;
      for (const auto& [c, p] : m) sum += p;
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(ComputePkl, EqualMarginalsGiveZero) {
  const auto doc = make_document("d", {"abc", "abc"});
  const auto pkl = compute_pkl(doc);
  ASSERT_TRUE(pkl.adjacent[0][0].has_value());
  EXPECT_NEAR(*pkl.adjacent[0][0], 0.0, 1e-12);
  EXPECT_NEAR(*pkl.skip[0][0], 0.0, 1e-12);
  EXPECT_FALSE(pkl.adjacent[0][1].has_value());
  EXPECT_FALSE(pkl.adjacent[0][2].has_value());
}

TEST(ComputePkl, HalfLogTwoOnConstructedDocument) {
  const auto doc = make_document("d", {"abc", "abc", "ayc", "ayc", "xzc", "xzc", "xwc", "xwc"});
  const auto oracle = oracle_trigrams(doc);
  ASSERT_DOUBLE_EQ(oracle.p1(U'a'), 0.5);
  ASSERT_DOUBLE_EQ(oracle.p(1, U'b'), 0.25);
  const double expected = oracle.p1(U'a') * std::log(oracle.p1(U'a') / oracle.p(1, U'b'));
  const auto pkl = compute_pkl(doc);
  EXPECT_NEAR(*pkl.adjacent[0][0], expected, 1e-9);
  EXPECT_NEAR(*pkl.adjacent[0][0], 0.5 * std::log(2.0), 1e-9);
}

TEST(ComputePkl, NoFrequentTrigramMeansNoScores) {
  const auto doc = make_document("d", {"abcdef", "ghijk"});
  const auto pkl = compute_pkl(doc);
  for (const auto& s : pkl.adjacent) {
    for (const auto& v : s) EXPECT_FALSE(v.has_value());
  }
  for (const auto& s : compute_pmi(doc).skip) {
    for (const auto& v : s) EXPECT_FALSE(v.has_value());
  }
}

TEST(ComputePmi, AnalyticCases) {
  const auto single = compute_pmi(make_document("d", {"abc", "abc"}));
  EXPECT_NEAR(*single.adjacent[0][0], 0.0, 1e-9);

  const auto independent = compute_pmi(make_document("d", {"abc", "abc", "dbc", "dbc"}));
  EXPECT_NEAR(*independent.adjacent[0][0], 0.0, 1e-9);

  const auto associated = compute_pmi(make_document("d", {"abc", "abc", "dec", "dec"}));
  EXPECT_NEAR(*associated.adjacent[0][0], std::log(2.0), 1e-9);
}

TEST(DocScores, MatchOracleAndSignStructure) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto doc = random_document(rng, 3, 250);
    const auto oracle = oracle_trigrams(doc);
    const auto pkl = compute_pkl(doc);
    const auto pmi = compute_pmi(doc);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const auto& sent = doc.sentences[s];
      for (std::size_t i = 0; i < sent.size(); ++i) {
        const bool scored = i + 3 <= sent.size() &&
                            oracle.survived(sent.substr(i, 3));
        ASSERT_EQ(pkl.adjacent[s][i].has_value(), scored);
        ASSERT_EQ(pmi.skip[s][i].has_value(), scored);
        if (!scored) continue;
        const double p = oracle.p1(sent[i]);
        const double q1 = oracle.p(1, sent[i + 1]);
        const double q2 = oracle.p(2, sent[i + 2]);
        ASSERT_NEAR(*pkl.adjacent[s][i], p * std::log(p / q1), 1e-12);
        ASSERT_NEAR(*pkl.skip[s][i], p * std::log(p / q2), 1e-12);
        if (p > q1) ASSERT_GT(*pkl.adjacent[s][i], 0.0);
        if (p < q1) ASSERT_LT(*pkl.adjacent[s][i], 0.0);
        const double j1 = oracle.joint(1, sent[i], sent[i + 1]);
        const double j2 = oracle.joint(2, sent[i], sent[i + 2]);
        ASSERT_NEAR(*pmi.adjacent[s][i], std::log(j1 / (p * q1)), 1e-12);
        ASSERT_NEAR(*pmi.skip[s][i], std::log(j2 / (p * q2)), 1e-12);
        if (std::abs(j1 - p * q1) < 1e-12) ASSERT_NEAR(*pmi.adjacent[s][i], 0.0, 1e-9);
      }
    }
  }
}

std::vector<std::size_t> bin_sizes(const std::vector<BinnedScore>& bins) {
  std::vector<std::size_t> sizes(5, 0);
  for (const auto& b : bins) {
    if (b) ++sizes[static_cast<std::size_t>(*b - 1)];
  }
  return sizes;
}

TEST(BinScores, TenValuesEqualSplit) {
  std::vector<std::optional<double>> v = {9, 3, 7, 1, 5, 0, 8, 2, 6, 4};
  const auto bins = bin_scores(v, BinDirection::Ascending);
  EXPECT_EQ(bin_sizes(bins), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  EXPECT_EQ(bins[5], 1);  // 0
  EXPECT_EQ(bins[3], 1);  // 1
  EXPECT_EQ(bins[0], 5);  // 9
  const auto desc = bin_scores(v, BinDirection::Descending);
  EXPECT_EQ(desc[0], 1);
  EXPECT_EQ(desc[5], 5);
}

TEST(BinScores, SevenValuesEarlierBinsTakeExtras) {
  std::vector<std::optional<double>> v = {1, 2, 3, 4, 5, 6, 7};
  const auto bins = bin_scores(v, BinDirection::Ascending);
  EXPECT_EQ(bin_sizes(bins), (std::vector<std::size_t>{2, 2, 1, 1, 1}));
  EXPECT_EQ(bins, (std::vector<BinnedScore>{1, 1, 2, 2, 3, 4, 5}));
}

TEST(BinScores, TiesKeepPositionOrder) {
  std::vector<std::optional<double>> v = {0.5, 0.5, 0.5};
  EXPECT_EQ(bin_scores(v, BinDirection::Ascending), (std::vector<BinnedScore>{1, 2, 3}));
  EXPECT_EQ(bin_scores(v, BinDirection::Descending), (std::vector<BinnedScore>{1, 2, 3}));
}

TEST(BinScores, ScorelessPositionsGetNone) {
  std::vector<std::optional<double>> v = {std::nullopt, 1.0, std::nullopt};
  const auto bins = bin_scores(v, BinDirection::Ascending);
  EXPECT_FALSE(bins[0].has_value());
  EXPECT_EQ(bins[1], 1);
  EXPECT_EQ(bin_value(bins[0]), "none");
}

TEST(BinScores, PartitionProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-2, 2);
  std::bernoulli_distribution present(0.7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::optional<double>> v(static_cast<std::size_t>(trial));
    std::size_t scored = 0;
    for (auto& x : v) {
      if (present(rng)) {
        x = std::round(val(rng) * 4) / 4;  // plenty of ties
        ++scored;
      }
    }
    const auto bins = bin_scores(v, trial % 2 ? BinDirection::Ascending : BinDirection::Descending);
    const auto sizes = bin_sizes(bins);
    std::size_t total = 0;
    for (std::size_t k = 0; k < v.size(); ++k) ASSERT_EQ(bins[k].has_value(), v[k].has_value());
    for (auto s : sizes) total += s;
    ASSERT_EQ(total, scored);
    ASSERT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
    // Bins are monotone in the score.
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[a] && v[b] && *v[a] < *v[b]) {
          ASSERT_EQ(trial % 2 ? *bins[a] <= *bins[b] : *bins[a] >= *bins[b], true);
        }
      }
    }
  }
}

TEST(DocFeatures, EmitsNamedTemplatesPerPosition) {
  const auto doc = make_document("d", {"abcab", "abc"});
  const auto feats = doc_features(doc, {true, true, true});
  ASSERT_EQ(feats.size(), 2u);
  for (const auto& s : feats) {
    for (const auto& fv : s) {
      ASSERT_EQ(fv.size(), 5u);
      EXPECT_EQ(fv[0].id, "LNG");
      EXPECT_EQ(fv[1].id, "PKL1");
      EXPECT_EQ(fv[2].id, "PKL2");
      EXPECT_EQ(fv[3].id, "PMI1");
      EXPECT_EQ(fv[4].id, "PMI2");
    }
  }
  // "abc" is the only frequent trigram: positions 0 of both sentences scored.
  EXPECT_EQ(feats[0][0][1].value, "1");
  EXPECT_EQ(feats[1][0][1].value, "2");
  EXPECT_EQ(feats[0][1][1].value, "none");
  EXPECT_EQ(feats[0][0][0].value, "S");  // LNG list is {"abc"}
  EXPECT_EQ(feats[1][2][0].value, "F");
  EXPECT_TRUE(doc_features(doc, {}).at(0).at(0).empty());
}

}  // namespace
}  // namespace cws
