#pragma once

// Knowledge extracted from a source-domain corpus: the most frequent POS tag
// of each single-character word, a dictionary of 2- and 3-character words,
// and character vectors from a truncated SVD of sentence co-occurrence PPMI.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cws/corpus.hpp"
#include "cws/feature_vector.hpp"
#include "cws/io.hpp"

namespace cws {

using PosLexicon = std::map<Character, std::string>;
using WordDictionary = std::set<std::u32string>;

inline constexpr std::string_view kNoTag = "<NOTAG>";

// Ties between equally frequent tags go to the lexicographically smallest tag.
inline PosLexicon build_pos_lexicon(const Corpus& source) {
  std::map<Character, std::map<std::string, std::size_t>> counts;
  for (const auto& doc : source) {
    for (const auto& seg : doc.segmented) {
      if (seg.tags.empty()) continue;
      for (std::size_t w = 0; w < seg.words.size(); ++w) {
        if (seg.words[w].size() == 1) ++counts[seg.words[w][0]][seg.tags[w]];
      }
    }
  }
  PosLexicon lex;
  for (const auto& [c, tags] : counts) {
    const auto best = std::max_element(tags.begin(), tags.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;  // max_element keeps the first maximum
    });
    lex.emplace(c, best->first);
  }
  return lex;
}

inline WordDictionary build_dictionary(const Corpus& source) {
  WordDictionary dict;
  for (const auto& doc : source) {
    for (const auto& seg : doc.segmented) {
      for (const auto& w : seg.words) {
        if (w.size() == 2 || w.size() == 3) dict.insert(w);
      }
    }
  }
  return dict;
}

struct SimilarityModel {
  std::vector<Character> vocabulary;
  Eigen::MatrixXd vectors;  // one row per vocabulary entry
  std::unordered_map<Character, std::size_t> index;

  std::size_t dimension() const { return static_cast<std::size_t>(vectors.cols()); }

  void rebuild_index() {
    index.clear();
    for (std::size_t i = 0; i < vocabulary.size(); ++i) index.emplace(vocabulary[i], i);
  }

  // Cosine similarity; 0 when either character is unknown or has a zero vector.
  double similarity(Character a, Character b) const {
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) return 0.0;
    const auto ra = vectors.row(static_cast<Eigen::Index>(ia->second));
    const auto rb = vectors.row(static_cast<Eigen::Index>(ib->second));
    const double na = ra.norm();
    const double nb = rb.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(ra.dot(rb) / (na * nb), -1.0, 1.0);
  }
};

inline std::vector<Character> character_inventory(const std::vector<Sentence>& sentences) {
  std::set<Character> chars;
  for (const auto& s : sentences) chars.insert(s.begin(), s.end());
  return {chars.begin(), chars.end()};
}

// M[i][j] (i != j) accumulates, per sentence, the number of (C_i, C_j)
// occurrence pairs: count(C_i) * count(C_j) within that sentence.
inline Eigen::MatrixXd cooccurrence_matrix(const std::vector<Sentence>& sentences,
                                           const std::vector<Character>& vocabulary) {
  std::unordered_map<Character, Eigen::Index> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    index.emplace(vocabulary[i], static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(vocabulary.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& sent : sentences) {
    std::map<Eigen::Index, double> counts;
    for (Character c : sent) {
      const auto it = index.find(c);
      if (it != index.end()) counts[it->second] += 1.0;
    }
    for (const auto& [i, ci] : counts) {
      for (const auto& [j, cj] : counts) {
        if (i != j) m(i, j) += ci * cj;
      }
    }
  }
  return m;
}

// PPMI of a joint count table: p(i,j) = M_ij / total with row/column-sum
// marginals; negative (and undefined) PMI is clipped to zero.
inline Eigen::MatrixXd ppmi(const Eigen::MatrixXd& m) {
  const double total = m.sum();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  if (total <= 0.0) return p;
  const Eigen::VectorXd rows = m.rowwise().sum();
  const Eigen::RowVectorXd cols = m.colwise().sum();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) <= 0.0) continue;
      const double pmi = std::log(m(i, j) * total / (rows(i) * cols(j)));
      p(i, j) = pmi > 0.0 ? pmi : 0.0;
    }
  }
  return p;
}

// Rank-k factor F = U_k * Sigma_k of a symmetric matrix. For symmetric P the
// singular values are |eigenvalues| and U holds the eigenvectors, so the
// self-adjoint solver yields an exact SVD. Columns are sign-normalised
// (largest-magnitude component positive) for reproducibility.
inline Eigen::MatrixXd truncated_svd_factor(const Eigen::MatrixXd& p, std::size_t k) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(p);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCategory::Training, "eigendecomposition of the PPMI matrix failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values(a)) > std::abs(values(b));
  });
  Eigen::MatrixXd f(p.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::Index src = order[c];
    Eigen::VectorXd u = vectors.col(src);
    Eigen::Index argmax = 0;
    u.cwiseAbs().maxCoeff(&argmax);
    if (u(argmax) < 0) u = -u;
    f.col(static_cast<Eigen::Index>(c)) = u * std::abs(values(src));
  }
  return f;
}

inline SimilarityModel build_similarity(const std::vector<Sentence>& sentences, std::size_t k) {
  if (k < 1) throw Error(ErrorCategory::Precondition, "similarity dimension k must be >= 1");
  SimilarityModel model;
  model.vocabulary = character_inventory(sentences);
  const std::size_t n = model.vocabulary.size();
  if (k > n) {
    throw Error(ErrorCategory::Precondition,
                "similarity dimension k=" + std::to_string(k) +
                    " exceeds the character inventory n=" + std::to_string(n));
  }
  model.vectors = truncated_svd_factor(ppmi(cooccurrence_matrix(sentences, model.vocabulary)), k);
  model.rebuild_index();
  return model;
}

inline std::vector<Sentence> corpus_sentences(const Corpus& corpus) {
  std::vector<Sentence> out;
  for (const auto& d : corpus) out.insert(out.end(), d.sentences.begin(), d.sentences.end());
  return out;
}

// Similarities of C_i with C_{i-2}, C_{i-1}, C_{i+1}, C_{i+2}, in that order.
inline std::array<double, 4> sim_features(const SimilarityModel& model, const Sentence& sent,
                                          std::size_t i) {
  std::array<double, 4> out{};
  constexpr std::array<std::ptrdiff_t, 4> offsets = {-2, -1, 1, 2};
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const auto j = static_cast<std::ptrdiff_t>(i) + offsets[k];
    if (i >= sent.size() || j < 0 || j >= static_cast<std::ptrdiff_t>(sent.size())) continue;
    out[k] = model.similarity(sent[i], sent[static_cast<std::size_t>(j)]);
  }
  return out;
}

// Ten equal-width intervals over [-1, 1] labelled "0".."9"; an exact zero
// (unknown character or sentence edge) maps to "zero".
inline std::string discretize_similarity(double s) {
  if (s == 0.0) return "zero";
  auto idx = static_cast<int>(std::floor((s + 1.0) / 0.2));
  idx = std::clamp(idx, 0, 9);
  return std::to_string(idx);
}

inline std::string cpos_feature(const PosLexicon& lex, Character c) {
  const auto it = lex.find(c);
  return it == lex.end() ? std::string(kNoTag) : it->second;
}

inline int dict_feature(const WordDictionary& dict, const Sentence& sent, std::size_t i) {
  if (dict.empty() || i >= sent.size()) return 0;
  const auto n = static_cast<std::ptrdiff_t>(sent.size());
  const auto p = static_cast<std::ptrdiff_t>(i);
  // (start offset, length): C_iC_{i+1}C_{i+2}, C_{i-1}C_iC_{i+1}, C_{i-2}C_{i-1}C_i,
  // C_iC_{i+1}, C_{i-1}C_i.
  constexpr std::array<std::pair<std::ptrdiff_t, std::ptrdiff_t>, 5> windows = {
      {{0, 3}, {-1, 3}, {-2, 3}, {0, 2}, {-1, 2}}};
  for (const auto& [offset, len] : windows) {
    const auto start = p + offset;
    if (start < 0 || start + len > n) continue;
    if (dict.count(sent.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(len)))) {
      return 1;
    }
  }
  return 0;
}

struct ExternalFeatureGroups {
  bool cpos = false;
  bool dict = false;
  bool sim = false;

  bool any() const { return cpos || dict || sim; }
};

struct KnowledgeBase {
  PosLexicon cpos;
  WordDictionary dict;
  SimilarityModel sim;
};

inline KnowledgeBase build_knowledge(const Corpus& source, std::size_t k) {
  bool tagged = false;
  for (const auto& d : source) {
    for (const auto& s : d.segmented) tagged = tagged || !s.tags.empty();
  }
  if (!tagged) {
    throw Error(ErrorCategory::Precondition, "knowledge source corpus carries no POS tags");
  }
  return {build_pos_lexicon(source), build_dictionary(source),
          build_similarity(corpus_sentences(source), k)};
}

inline SentenceFeatures external_features(const KnowledgeBase& kb, const Sentence& sent,
                                          ExternalFeatureGroups groups) {
  SentenceFeatures out(sent.size());
  for (std::size_t i = 0; i < sent.size(); ++i) {
    auto& fv = out[i];
    if (groups.cpos) fv.push_back({"C_POS", cpos_feature(kb.cpos, sent[i])});
    if (groups.dict) fv.push_back({"DICT", std::to_string(dict_feature(kb.dict, sent, i))});
    if (groups.sim) {
      static constexpr std::array<const char*, 4> ids = {"SIM[-2]", "SIM[-1]", "SIM[+1]",
                                                         "SIM[+2]"};
      const auto sims = sim_features(kb.sim, sent, i);
      for (std::size_t k = 0; k < 4; ++k) fv.push_back({ids[k], discretize_similarity(sims[k])});
    }
  }
  return out;
}

// Archive layout: cpos.tsv, dict.txt and sim.tsv inside one directory.
inline void write_knowledge(const std::filesystem::path& dir, const KnowledgeBase& kb) {
  std::string cpos;
  for (const auto& [c, tag] : kb.cpos) cpos += utf8::encode(c) + '\t' + tag + '\n';
  std::string dict;
  for (const auto& w : kb.dict) dict += utf8::encode(w) + '\n';
  std::string sim = std::to_string(kb.sim.vocabulary.size()) + ' ' +
                    std::to_string(kb.sim.dimension()) + '\n';
  char buf[64];
  for (std::size_t i = 0; i < kb.sim.vocabulary.size(); ++i) {
    sim += utf8::encode(kb.sim.vocabulary[i]);
    sim += '\t';
    for (std::size_t c = 0; c < kb.sim.dimension(); ++c) {
      if (c) sim += ' ';
      std::snprintf(buf, sizeof buf, "%.9g",
                    kb.sim.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
      sim += buf;
    }
    sim += '\n';
  }
  io::atomic_write_file(dir / "cpos.tsv", cpos);
  io::atomic_write_file(dir / "dict.txt", dict);
  io::atomic_write_file(dir / "sim.tsv", sim);
}

inline KnowledgeBase read_knowledge(const std::filesystem::path& dir) {
  KnowledgeBase kb;
  const auto lines_of = [&](const char* name) {
    std::vector<std::string> lines;
    std::istringstream in(io::read_file(dir / name));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) lines.push_back(line);
    }
    return lines;
  };
  const auto bad = [&](const char* name, std::size_t line) {
    return Error(ErrorCategory::Parse, (dir / name).string() + ":" + std::to_string(line) +
                                           ": malformed knowledge entry");
  };

  std::size_t lineno = 0;
  for (const auto& line : lines_of("cpos.tsv")) {
    ++lineno;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw bad("cpos.tsv", lineno);
    const auto c = utf8::decode(line.substr(0, tab));
    if (c.size() != 1 || tab + 1 == line.size()) throw bad("cpos.tsv", lineno);
    kb.cpos.emplace(c[0], line.substr(tab + 1));
  }
  for (const auto& line : lines_of("dict.txt")) kb.dict.insert(utf8::decode(line));

  const auto sim_lines = lines_of("sim.tsv");
  if (sim_lines.empty()) throw bad("sim.tsv", 1);
  std::size_t n = 0, k = 0;
  {
    std::istringstream header(sim_lines[0]);
    if (!(header >> n >> k) || sim_lines.size() != n + 1) throw bad("sim.tsv", 1);
  }
  kb.sim.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& line = sim_lines[i + 1];
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw bad("sim.tsv", i + 2);
    const auto c = utf8::decode(line.substr(0, tab));
    if (c.size() != 1) throw bad("sim.tsv", i + 2);
    kb.sim.vocabulary.push_back(c[0]);
    std::istringstream values(line.substr(tab + 1));
    for (std::size_t col = 0; col < k; ++col) {
      std::string tok;
      if (!(values >> tok)) throw bad("sim.tsv", i + 2);
      kb.sim.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
          std::stod(tok);
    }
  }
  kb.sim.rebuild_index();
  return kb;
}

}  // namespace cws
