#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "cws/external_features.hpp"
#include "support/test_util.hpp"

namespace cws {
namespace {

using testing::make_segmented_document;
using testing::seg;
using testing::TempDir;
using testing::u32;

SegmentedSentence tagged(std::initializer_list<std::pair<std::string_view, std::string_view>> items) {
  SegmentedSentence s;
  for (const auto& [w, t] : items) {
    s.words.push_back(u32(w));
    s.tags.emplace_back(t);
  }
  return s;
}

std::vector<Sentence> random_sentences(std::mt19937_64& rng, std::size_t alphabet, std::size_t count) {
  std::uniform_int_distribution<std::size_t> letter(0, alphabet - 1), len(1, 12);
  std::vector<Sentence> out;
  for (std::size_t s = 0; s < count; ++s) {
    Sentence sent;
    const auto n = len(rng);
    for (std::size_t k = 0; k < n; ++k) sent.push_back(U'a' + static_cast<char32_t>(letter(rng)));
    out.push_back(sent);
  }
  return out;
}

double row_cosine(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  const double na = m.row(a).norm(), nb = m.row(b).norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return m.row(a).dot(m.row(b)) / (na * nb);
}

TEST(PosLexicon, MajorityTagWins) {
  Corpus c{make_segmented_document(
      "d", {tagged({{"地", "NN"}, {"地", "NN"}}), tagged({{"地", "NN"}, {"地", "AD"}, {"地板", "NN"}})})};
  const auto lex = build_pos_lexicon(c);
  EXPECT_EQ(lex.at(U'地'), "NN");
  EXPECT_EQ(lex.count(U'板'), 0u);
}

TEST(PosLexicon, TiesGoToSmallestTag) {
  Corpus c{make_segmented_document(
      "d", {tagged({{"跑", "VV"}, {"跑", "NN"}, {"跑", "VV"}, {"跑", "NN"}})})};
  EXPECT_EQ(build_pos_lexicon(c).at(U'跑'), "NN");
  Corpus reversed{make_segmented_document(
      "d", {tagged({{"跑", "NN"}, {"跑", "VV"}, {"跑", "NN"}, {"跑", "VV"}})})};
  EXPECT_EQ(build_pos_lexicon(reversed), build_pos_lexicon(c));
}

TEST(Dictionary, KeepsTwoAndThreeCharacterWords) {
  Corpus c{make_segmented_document("d", {seg({"地板", "很", "好", "干扰素", "大肠杆菌"})})};
  EXPECT_EQ(build_dictionary(c), (WordDictionary{u32("地板"), u32("干扰素")}));
  EXPECT_TRUE(build_dictionary({}).empty());
}

TEST(Cooccurrence, PairInstanceCountsAgainstOracle) {
  std::mt19937_64 rng(11);
  const auto sents = random_sentences(rng, 8, 60);
  const auto vocab = character_inventory(sents);
  const auto m = cooccurrence_matrix(sents, vocab);
  std::map<std::pair<char32_t, char32_t>, double> oracle;
  for (const auto& s : sents) {
    for (std::size_t p = 0; p < s.size(); ++p) {
      for (std::size_t q = 0; q < s.size(); ++q) {
        if (s[p] != s[q]) oracle[{s[p], s[q]}] += 1.0;
      }
    }
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    for (std::size_t j = 0; j < vocab.size(); ++j) {
      const auto it = oracle.find({vocab[i], vocab[j]});
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      ASSERT_EQ(m(ii, jj), it == oracle.end() ? 0.0 : it->second);
      ASSERT_EQ(m(ii, jj), m(jj, ii));
    }
    ASSERT_EQ(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 0.0);
  }
}

TEST(Cooccurrence, MultiplicityIsMultiplied) {
  const std::vector<Sentence> sents{U"abb"};
  const auto m = cooccurrence_matrix(sents, character_inventory(sents));
  EXPECT_EQ(m(0, 1), 2.0);
  EXPECT_EQ(m(1, 0), 2.0);
}

TEST(Ppmi, ClipsNegativesAndMatchesDefinition) {
  Eigen::MatrixXd m(3, 3);
  m << 0, 10, 1, 10, 0, 5, 1, 5, 0;
  const auto p = ppmi(m);
  const double total = m.sum();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      ASSERT_GE(p(i, j), 0.0);
      if (m(i, j) == 0) {
        ASSERT_EQ(p(i, j), 0.0);
        continue;
      }
      const double pmi = std::log((m(i, j) / total) / ((m.row(i).sum() / total) * (m.col(j).sum() / total)));
      ASSERT_NEAR(p(i, j), std::max(pmi, 0.0), 1e-12);
    }
  }
  // The (0,2) cell has negative PMI and is clipped.
  EXPECT_EQ(p(0, 2), 0.0);
}

TEST(Similarity, FullRankPreservesCosines) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto sents = random_sentences(rng, 20 + static_cast<std::size_t>(trial) * 5, 80);
    const auto vocab = character_inventory(sents);
    const auto p = ppmi(cooccurrence_matrix(sents, vocab));
    const auto model = build_similarity(sents, vocab.size());
    for (std::size_t a = 0; a < vocab.size(); ++a) {
      for (std::size_t b = 0; b < vocab.size(); ++b) {
        ASSERT_NEAR(model.similarity(vocab[a], vocab[b]),
                    row_cosine(p, static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), 1e-6);
      }
    }
  }
}

TEST(Similarity, IdenticalContextsGiveCosineOne) {
  std::vector<Sentence> sents{U"xab", U"yab", U"abc", U"bcd", U"cd"};
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto model = build_similarity(sents, k);
    EXPECT_NEAR(model.similarity(U'x', U'y'), 1.0, 1e-9) << "k=" << k;
  }
}

TEST(Similarity, RejectsOversizedDimension) {
  const std::vector<Sentence> sents{U"abc"};
  try {
    build_similarity(sents, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Precondition);
    EXPECT_NE(std::string(e.what()).find("n=3"), std::string::npos);
  }
  EXPECT_THROW(build_similarity(sents, 0), Error);
}

TEST(Similarity, SimFeaturesEdgeAndAbsentRules) {
  SimilarityModel model;
  model.vocabulary = {U'a', U'b', U'c'};
  model.vectors.resize(3, 2);
  model.vectors << 1, 0, 2, 0, 0, 1;
  model.rebuild_index();
  const Sentence sent = U"abzc";
  auto s = sim_features(model, sent, 0);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_NEAR(s[2], 1.0, 1e-12);
  EXPECT_EQ(s[3], 0.0);  // 'z' is unknown
  s = sim_features(model, sent, 2);
  EXPECT_EQ(s, (std::array<double, 4>{0, 0, 0, 0}));
  s = sim_features(model, sent, 3);
  EXPECT_NEAR(s[0], 0.0, 1e-12);  // b and c are orthogonal
  EXPECT_EQ(s[1], 0.0);
}

TEST(Similarity, EmittedValuesStayInRange) {
  std::mt19937_64 rng(4);
  const auto sents = random_sentences(rng, 15, 50);
  const auto model = build_similarity(sents, 5);
  for (const auto& s : sents) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (double v : sim_features(model, s, i)) {
        ASSERT_GE(v, -1.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
  for (Eigen::Index i = 0; i < model.vectors.size(); ++i) ASSERT_TRUE(std::isfinite(model.vectors.data()[i]));
}

TEST(Similarity, Discretization) {
  EXPECT_EQ(discretize_similarity(0.0), "zero");
  EXPECT_EQ(discretize_similarity(-1.0), "0");
  EXPECT_EQ(discretize_similarity(1.0), "9");
  EXPECT_EQ(discretize_similarity(0.05), "5");
  EXPECT_EQ(discretize_similarity(-0.05), "4");
  EXPECT_EQ(discretize_similarity(0.99), "9");
}

TEST(CposFeature, LookupAndNoTag) {
  const PosLexicon lex{{U'地', "NN"}};
  EXPECT_EQ(cpos_feature(lex, U'地'), "NN");
  EXPECT_EQ(cpos_feature(lex, U'天'), kNoTag);
  EXPECT_EQ(cpos_feature({}, U'地'), kNoTag);
}

TEST(DictFeature, Windows) {
  const WordDictionary dict{u32("地板")};
  const auto sent = u32("地板好");
  EXPECT_EQ(dict_feature(dict, sent, 0), 1);
  EXPECT_EQ(dict_feature(dict, sent, 1), 1);
  EXPECT_EQ(dict_feature(dict, sent, 2), 0);
  EXPECT_EQ(dict_feature({}, sent, 0), 0);
  const WordDictionary tri{u32("地板好")};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(dict_feature(tri, sent, i), 1);
}

TEST(DictFeature, AddingEntriesNeverRemovesHits) {
  std::mt19937_64 rng(8);
  const auto sents = random_sentences(rng, 5, 40);
  WordDictionary dict;
  std::uniform_int_distribution<std::size_t> pick(0, sents.size() - 1);
  std::vector<std::vector<int>> before;
  for (int step = 0; step < 30; ++step) {
    std::vector<std::vector<int>> now;
    for (const auto& s : sents) {
      now.emplace_back();
      for (std::size_t i = 0; i < s.size(); ++i) now.back().push_back(dict_feature(dict, s, i));
    }
    for (std::size_t a = 0; a < before.size(); ++a) {
      for (std::size_t i = 0; i < before[a].size(); ++i) ASSERT_LE(before[a][i], now[a][i]);
    }
    before = now;
    const auto& s = sents[pick(rng)];
    if (s.size() >= 2) dict.insert(s.substr(0, 2 + (s.size() > 2 ? step % 2 : 0)));
  }
}

Corpus knowledge_corpus() {
  return {make_segmented_document("a", {tagged({{"地板", "NN"}, {"很", "AD"}, {"好", "VA"}}),
                                        tagged({{"干扰素", "NN"}, {"好", "VA"}, {"。", "PU"}})}),
          make_segmented_document("b", {tagged({{"大肠杆菌", "NN"}, {"很", "AD"}, {"多", "VA"}})})};
}

TEST(Knowledge, ExternalFeatureTemplates) {
  const auto kb = build_knowledge(knowledge_corpus(), 3);
  const auto feats = external_features(kb, u32("地板很好"), {true, true, true});
  ASSERT_EQ(feats.size(), 4u);
  const std::vector<std::string> ids{"C_POS", "DICT", "SIM[-2]", "SIM[-1]", "SIM[+1]", "SIM[+2]"};
  for (const auto& fv : feats) {
    ASSERT_EQ(fv.size(), ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) EXPECT_EQ(fv[k].id, ids[k]);
  }
  EXPECT_EQ(feats[0][0].value, kNoTag);
  EXPECT_EQ(feats[2][0].value, "AD");
  EXPECT_EQ(feats[0][1].value, "1");
  EXPECT_EQ(feats[3][1].value, "0");
  EXPECT_EQ(feats[0][2].value, "zero");
  EXPECT_EQ(feats[0][3].value, "zero");
  EXPECT_EQ(external_features(kb, u32("天"), {false, false, true})[0][2].value, "zero");
}

TEST(Knowledge, RequiresTaggedSource) {
  Corpus c{make_segmented_document("d", {seg({"地板", "很"})})};
  EXPECT_THROW(build_knowledge(c, 1), Error);
}

TEST(Knowledge, ArchiveRoundTripIsStable) {
  const auto kb = build_knowledge(knowledge_corpus(), 4);
  TempDir a, b;
  write_knowledge(a.path(), kb);
  const auto back = read_knowledge(a.path());
  EXPECT_EQ(back.cpos, kb.cpos);
  EXPECT_EQ(back.dict, kb.dict);
  EXPECT_EQ(back.sim.vocabulary, kb.sim.vocabulary);
  ASSERT_EQ(back.sim.vectors.rows(), kb.sim.vectors.rows());
  ASSERT_EQ(back.sim.vectors.cols(), kb.sim.vectors.cols());
  EXPECT_LT((back.sim.vectors - kb.sim.vectors).cwiseAbs().maxCoeff(), 1e-7);
  write_knowledge(b.path(), build_knowledge(knowledge_corpus(), 4));
  for (const char* f : {"cpos.tsv", "dict.txt", "sim.tsv"}) {
    EXPECT_EQ(io::read_file(a / f), io::read_file(b / f)) << f;
  }
  write_knowledge(b.path(), back);
  EXPECT_EQ(io::read_file(a / "sim.tsv"), io::read_file(b / "sim.tsv"));
}

TEST(Knowledge, MalformedArchiveNamesFileAndLine) {
  TempDir dir;
  dir.write("cpos.tsv", "地\tNN\n板\n");
  dir.write("dict.txt", "");
  dir.write("sim.tsv", "0 0\n");
  try {
    read_knowledge(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cpos.tsv:2"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace cws
