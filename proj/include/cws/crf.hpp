#pragma once

// Linear-chain CRF over the four BMES labels. Every discrete feature value is
// crossed with each output label (one indicator weight per pair), plus a
// dense 4x4 block of label-transition weights.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cws/corpus.hpp"
#include "cws/feature_vector.hpp"
#include "cws/io.hpp"
#include "cws/lbfgs.hpp"

namespace cws {

inline constexpr std::size_t kNumTransitions = kNumLabels * kNumLabels;

inline std::string feature_key(const FeatureEntry& e) { return e.id + '=' + e.value; }

class FeatureRegistry {
 public:
  std::optional<std::uint32_t> find(std::string_view key) const {
    const auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t add(const std::string& key) {
    if (frozen_) throw Error(ErrorCategory::Training, "feature registry is frozen");
    const auto [it, inserted] = index_.emplace(key, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(key);
    return it->second;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::size_t num_features() const { return names_.size(); }
  const std::string& name(std::uint32_t f) const { return names_[f]; }

  static std::size_t transition_index(Label from, Label to) {
    return static_cast<std::size_t>(from) * kNumLabels + static_cast<std::size_t>(to);
  }
  static std::size_t emission_index(std::uint32_t feature, Label label) {
    return kNumTransitions + static_cast<std::size_t>(feature) * kNumLabels +
           static_cast<std::size_t>(label);
  }
  std::size_t weight_count() const { return kNumTransitions + names_.size() * kNumLabels; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

// A sentence's features resolved against a registry: registered feature ids
// per position, in CSR layout.
struct EncodedSequence {
  std::vector<std::uint32_t> ids;
  std::vector<std::uint32_t> offsets{0};

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const std::uint32_t> at(std::size_t i) const {
    return {ids.data() + offsets[i], ids.data() + offsets[i + 1]};
  }
};

struct TrainingInstance {
  std::string id;
  SentenceFeatures features;
  LabeledSequence gold;
};

struct CrfConfig {
  double lambda = 0.01;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;
  // Features seen fewer times than this in training are not registered.
  std::size_t min_feature_freq = 1;
};

// Per-position label scores: emission[i][y].
using EmissionTable = std::vector<std::array<double, kNumLabels>>;
using Marginals = std::vector<std::array<double, kNumLabels>>;

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct ForwardBackward {
  std::vector<std::array<double, kNumLabels>> alpha, beta;
  double log_z = 0.0;
};

inline ForwardBackward forward_backward(const EmissionTable& e, std::span<const double> trans) {
  const std::size_t n = e.size();
  ForwardBackward fb;
  fb.alpha.resize(n);
  fb.beta.resize(n);
  std::array<double, kNumLabels> tmp{};
  fb.alpha[0] = e[0];
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t y = 0; y < kNumLabels; ++y) {
      for (std::size_t p = 0; p < kNumLabels; ++p) tmp[p] = fb.alpha[i - 1][p] + trans[p * kNumLabels + y];
      fb.alpha[i][y] = e[i][y] + log_sum_exp(tmp);
    }
  }
  fb.beta[n - 1].fill(0.0);
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t y = 0; y < kNumLabels; ++y) {
      for (std::size_t q = 0; q < kNumLabels; ++q) {
        tmp[q] = trans[y * kNumLabels + q] + e[i + 1][q] + fb.beta[i + 1][q];
      }
      fb.beta[i][y] = log_sum_exp(tmp);
    }
  }
  fb.log_z = log_sum_exp(fb.alpha[n - 1]);
  return fb;
}

}  // namespace detail

class CrfModel {
 public:
  CrfModel() : weights_(kNumTransitions, 0.0) {}
  CrfModel(FeatureRegistry registry, std::vector<double> weights, CrfConfig config = {})
      : registry_(std::move(registry)), weights_(std::move(weights)), config_(config) {
    if (weights_.size() != registry_.weight_count()) {
      throw Error(ErrorCategory::Precondition, "weight vector does not match registry size");
    }
  }

  const FeatureRegistry& registry() const { return registry_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& mutable_weights() { return weights_; }
  const CrfConfig& config() const { return config_; }

  double transition(Label from, Label to) const {
    return weights_[FeatureRegistry::transition_index(from, to)];
  }

  // Unregistered feature values are dropped, so they contribute nothing.
  EncodedSequence encode(const SentenceFeatures& features) const {
    EncodedSequence out;
    for (const auto& fv : features) {
      for (const auto& entry : fv) {
        if (const auto f = registry_.find(feature_key(entry))) out.ids.push_back(*f);
      }
      out.offsets.push_back(static_cast<std::uint32_t>(out.ids.size()));
    }
    return out;
  }

  EmissionTable emissions(const EncodedSequence& seq, std::span<const double> w) const {
    EmissionTable e(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      e[i].fill(0.0);
      for (auto f : seq.at(i)) {
        const double* row = w.data() + kNumTransitions + static_cast<std::size_t>(f) * kNumLabels;
        for (std::size_t y = 0; y < kNumLabels; ++y) e[i][y] += row[y];
      }
    }
    return e;
  }
  EmissionTable emissions(const EncodedSequence& seq) const { return emissions(seq, weights_); }

  double score(const EncodedSequence& seq, const LabeledSequence& labels) const {
    return score(seq, labels, weights_);
  }

  double score(const EncodedSequence& seq, const LabeledSequence& labels,
               std::span<const double> w) const {
    if (labels.size() != seq.size()) {
      throw Error(ErrorCategory::Precondition, "score: label/feature length mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (auto f : seq.at(i)) total += w[FeatureRegistry::emission_index(f, labels[i])];
      if (i > 0) total += w[FeatureRegistry::transition_index(labels[i - 1], labels[i])];
    }
    return total;
  }

  double score(const SentenceFeatures& features, const LabeledSequence& labels) const {
    return score(encode(features), labels);
  }

  // Highest-scoring labelling; among exact ties the lexicographically
  // smallest under B < M < E < S.
  LabeledSequence viterbi(const EncodedSequence& seq) const {
    const std::size_t n = seq.size();
    if (n == 0) return {};
    const auto e = emissions(seq);
    const std::span<const double> trans(weights_.data(), kNumTransitions);
    // best[i][y]: best score of positions i..n-1 given label y at i.
    std::vector<std::array<double, kNumLabels>> best(n);
    best[n - 1] = e[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      for (std::size_t y = 0; y < kNumLabels; ++y) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < kNumLabels; ++q) {
          m = std::max(m, trans[y * kNumLabels + q] + best[i + 1][q]);
        }
        best[i][y] = e[i][y] + m;
      }
    }
    LabeledSequence out(n);
    const auto pick = [](const std::array<double, kNumLabels>& v) {
      std::size_t arg = 0;
      for (std::size_t y = 1; y < kNumLabels; ++y) {
        if (v[y] > v[arg]) arg = y;
      }
      return arg;
    };
    std::size_t prev = pick(best[0]);
    out[0] = static_cast<Label>(prev);
    for (std::size_t i = 1; i < n; ++i) {
      std::array<double, kNumLabels> v{};
      for (std::size_t q = 0; q < kNumLabels; ++q) v[q] = trans[prev * kNumLabels + q] + best[i][q];
      prev = pick(v);
      out[i] = static_cast<Label>(prev);
    }
    return out;
  }

  LabeledSequence viterbi(const SentenceFeatures& features) const { return viterbi(encode(features)); }

  double log_partition(const EncodedSequence& seq) const {
    if (seq.size() == 0) return 0.0;
    return detail::forward_backward(emissions(seq),
                                    std::span<const double>(weights_.data(), kNumTransitions))
        .log_z;
  }

  Marginals marginals(const EncodedSequence& seq) const {
    Marginals out(seq.size());
    if (seq.size() == 0) return out;
    const auto fb = detail::forward_backward(
        emissions(seq), std::span<const double>(weights_.data(), kNumTransitions));
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (std::size_t y = 0; y < kNumLabels; ++y) {
        out[i][y] = std::exp(fb.alpha[i][y] + fb.beta[i][y] - fb.log_z);
      }
    }
    return out;
  }

  Marginals marginals(const SentenceFeatures& features) const { return marginals(encode(features)); }

  // Weight indices an input can read during decoding (emissions for every
  // label of each registered feature, plus all transitions).
  std::vector<std::size_t> touched_weights(const EncodedSequence& seq) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < kNumTransitions; ++t) out.push_back(t);
    for (auto f : seq.ids) {
      for (auto y : kAllLabels) out.push_back(FeatureRegistry::emission_index(f, y));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void save(std::ostream& out) const;
  static CrfModel load(std::istream& in);

  void save(const std::filesystem::path& path) const {
    std::ostringstream ss;
    save(ss);
    io::atomic_write_file(path, ss.str());
  }
  static CrfModel load(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    return load(in);
  }

 private:
  FeatureRegistry registry_;
  std::vector<double> weights_;
  CrfConfig config_;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

struct EncodedInstance {
  std::string id;
  EncodedSequence seq;
  LabeledSequence gold;
};

// Mean gold log-likelihood minus (lambda/2)||w||^2, and its exact gradient
// (empirical minus expected counts, averaged, minus lambda * w).
inline ObjectiveValue log_likelihood_and_gradient(const CrfModel& model,
                                                  std::span<const EncodedInstance> batch,
                                                  std::span<const double> w, double lambda) {
  ObjectiveValue out;
  out.gradient.assign(w.size(), 0.0);
  if (batch.empty()) return out;
  const std::span<const double> trans(w.data(), kNumTransitions);
  auto& g = out.gradient;
  double ll = 0.0;
  for (const auto& inst : batch) {
    const auto& seq = inst.seq;
    const std::size_t n = seq.size();
    if (n == 0) continue;
    const auto e = model.emissions(seq, w);
    const auto fb = detail::forward_backward(e, trans);
    const double gold = model.score(seq, inst.gold, w);
    const double inst_ll = gold - fb.log_z;
    if (!std::isfinite(inst_ll)) {
      throw Error(ErrorCategory::Training, "non-finite log-likelihood for instance '" + inst.id + "'");
    }
    ll += inst_ll;
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, kNumLabels> p{};
      for (std::size_t y = 0; y < kNumLabels; ++y) {
        p[y] = std::exp(fb.alpha[i][y] + fb.beta[i][y] - fb.log_z);
      }
      for (auto f : seq.at(i)) {
        double* row = g.data() + kNumTransitions + static_cast<std::size_t>(f) * kNumLabels;
        for (std::size_t y = 0; y < kNumLabels; ++y) row[y] -= p[y];
        row[static_cast<std::size_t>(inst.gold[i])] += 1.0;
      }
      if (i + 1 < n) {
        for (std::size_t a = 0; a < kNumLabels; ++a) {
          for (std::size_t b = 0; b < kNumLabels; ++b) {
            g[a * kNumLabels + b] -= std::exp(fb.alpha[i][a] + trans[a * kNumLabels + b] +
                                              e[i + 1][b] + fb.beta[i + 1][b] - fb.log_z);
          }
        }
        g[FeatureRegistry::transition_index(inst.gold[i], inst.gold[i + 1])] += 1.0;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  double norm2 = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    norm2 += w[k] * w[k];
    g[k] = g[k] * inv - lambda * w[k];
  }
  out.value = ll * inv - 0.5 * lambda * norm2;
  if (!std::isfinite(out.value)) throw Error(ErrorCategory::Training, "non-finite objective");
  return out;
}

struct TrainResult {
  CrfModel model;
  LbfgsResult optimizer;
};

// Registers every feature value seen in `data` (subject to the frequency
// cut-off), crosses it with all labels, and maximises the regularised mean
// log-likelihood with L-BFGS from zero weights.
inline TrainResult train_crf(std::span<const TrainingInstance> data, const CrfConfig& config) {
  if (data.empty()) throw Error(ErrorCategory::Precondition, "train: no training instances");
  FeatureRegistry registry;
  {
    std::unordered_map<std::string, std::size_t> freq;
    std::vector<std::string> order;
    for (const auto& inst : data) {
      if (inst.features.empty()) {
        throw Error(ErrorCategory::Precondition, "train: empty sentence in instance '" + inst.id + "'");
      }
      if (inst.features.size() != inst.gold.size()) {
        throw Error(ErrorCategory::Precondition, "train: feature/label length mismatch in '" + inst.id + "'");
      }
      for (const auto& fv : inst.features) {
        for (const auto& e : fv) {
          auto key = feature_key(e);
          if (freq[key]++ == 0) order.push_back(std::move(key));
        }
      }
    }
    for (const auto& key : order) {
      if (freq[key] >= config.min_feature_freq) registry.add(key);
    }
  }
  registry.freeze();
  std::vector<double> zeros(registry.weight_count(), 0.0);
  CrfModel model(std::move(registry), std::move(zeros), config);

  std::vector<EncodedInstance> encoded;
  encoded.reserve(data.size());
  for (const auto& inst : data) encoded.push_back({inst.id, model.encode(inst.features), inst.gold});

  std::vector<double> w(model.registry().weight_count(), 0.0);
  const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
    auto v = log_likelihood_and_gradient(model, encoded, x, config.lambda);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = -v.gradient[k];
    return -v.value;
  };
  LbfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.tolerance = config.tolerance;
  auto opt = lbfgs_minimize(objective, w, options);
  model.mutable_weights() = std::move(w);
  return {std::move(model), std::move(opt)};
}

namespace detail {

inline std::string escape_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape_key(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(s[i]);
    }
  }
  return out;
}

inline std::string hex_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

inline double parse_hex_double(std::string_view s) {
  double v = 0.0;
  bool negative = !s.empty() && s.front() == '-';
  if (negative) s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCategory::Parse, "model: bad weight '" + std::string(s) + "'");
  }
  return negative ? -v : v;
}

}  // namespace detail

inline constexpr std::string_view kModelMagic = "cws-crf-model";
inline constexpr int kModelVersion = 1;

// Text container; weights are written as hexadecimal floats so that a
// save/load round trip is bit-exact.
inline void CrfModel::save(std::ostream& out) const {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "labels BMES\n";
  out << "lambda " << detail::hex_double(config_.lambda) << '\n';
  out << "features " << registry_.num_features() << '\n';
  out << "transitions";
  for (std::size_t t = 0; t < kNumTransitions; ++t) out << ' ' << detail::hex_double(weights_[t]);
  out << '\n';
  for (std::uint32_t f = 0; f < registry_.num_features(); ++f) {
    out << detail::escape_key(registry_.name(f));
    for (auto y : kAllLabels) {
      out << '\t' << detail::hex_double(weights_[FeatureRegistry::emission_index(f, y)]);
    }
    out << '\n';
  }
}

inline CrfModel CrfModel::load(std::istream& in) {
  const auto bad = [](const std::string& what) {
    return Error(ErrorCategory::Parse, "model: " + what);
  };
  std::string magic, word;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) throw bad("not a model file");
  if (version != kModelVersion) throw bad("unsupported version " + std::to_string(version));
  std::string labels;
  if (!(in >> word >> labels) || word != "labels" || labels != "BMES") throw bad("bad label set");
  CrfConfig config;
  std::string lambda;
  if (!(in >> word >> lambda) || word != "lambda") throw bad("missing lambda");
  config.lambda = detail::parse_hex_double(lambda);
  std::size_t nfeat = 0;
  if (!(in >> word >> nfeat) || word != "features") throw bad("missing feature count");
  if (!(in >> word) || word != "transitions") throw bad("missing transitions");
  std::vector<double> weights(kNumTransitions + nfeat * kNumLabels);
  for (std::size_t t = 0; t < kNumTransitions; ++t) {
    std::string tok;
    if (!(in >> tok)) throw bad("truncated transitions");
    weights[t] = detail::parse_hex_double(tok);
  }
  std::string line;
  std::getline(in, line);
  FeatureRegistry registry;
  for (std::size_t f = 0; f < nfeat; ++f) {
    if (!std::getline(in, line)) throw bad("truncated feature table");
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 1 + kNumLabels) throw bad("bad feature line " + std::to_string(f + 1));
    const auto idx = registry.add(detail::unescape_key(fields[0]));
    if (idx != f) throw bad("duplicate feature '" + std::string(fields[0]) + "'");
    for (std::size_t y = 0; y < kNumLabels; ++y) {
      weights[FeatureRegistry::emission_index(idx, static_cast<Label>(y))] =
          detail::parse_hex_double(fields[1 + y]);
    }
  }
  registry.freeze();
  return CrfModel(std::move(registry), std::move(weights), config);
}

}  // namespace cws
