#pragma once

// Pipeline entry points behind the `cws` command-line tool.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "cws/config.hpp"
#include "cws/evaluation.hpp"
#include "cws/external_features.hpp"
#include "cws/io.hpp"

namespace cws {

namespace fs = std::filesystem;

inline fs::path manifest_path(const fs::path& model) {
  fs::path p = model;
  p += ".manifest.json";
  return p;
}

inline fs::path source_model_path(const fs::path& model) {
  fs::path p = model;
  p += ".source";
  return p;
}

namespace detail {

inline const std::string& require(const std::string& value, const char* key) {
  if (value.empty()) throw Error(ErrorCategory::Config, std::string("missing required setting ") + key);
  return value;
}

inline Corpus load_source(const RunConfig& cfg) {
  return read_corpus(require(cfg.source, "corpus.source"), parse_corpus_format(cfg.source_format));
}

inline std::optional<KnowledgeBase> load_knowledge_if_needed(const RunConfig& cfg) {
  if (!cfg.groups.needs_knowledge()) return std::nullopt;
  return read_knowledge(require(cfg.knowledge, "knowledge.archive"));
}

}  // namespace detail

inline KnowledgeBase cmd_extract_knowledge(const RunConfig& cfg) {
  const auto source = detail::load_source(cfg);
  auto kb = build_knowledge(source, cfg.sim_k);
  write_knowledge(detail::require(cfg.knowledge, "knowledge.archive"), kb);
  return kb;
}

// Picks the grid value with the best dev F1 (earliest value on ties).
inline double select_lambda(const RunConfig& cfg, const Corpus* source, const Corpus& train,
                            const Corpus& dev, const FeatureContext& ctx,
                            std::optional<AdaptationMode> mode = std::nullopt) {
  double best_lambda = cfg.lambda_grid.front();
  double best_f1 = -1.0;
  for (double lam : cfg.lambda_grid) {
    const auto model = train_adapted(mode.value_or(cfg.mode), source, train, ctx, cfg.crf_config(lam));
    const double f1 = evaluate_model(model, dev, ctx, nullptr).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_lambda = lam;
    }
  }
  return best_lambda;
}

struct TrainSummary {
  double lambda = 0.0;
  std::size_t features = 0;
};

inline TrainSummary cmd_train(const RunConfig& cfg) {
  const fs::path model_file = detail::require(cfg.model, "output.model");
  const auto target = read_corpus(detail::require(cfg.target_train, "corpus.target_train"),
                                  CorpusFormat::Segmented);
  std::optional<Corpus> source;
  if (mode_needs_source(cfg.mode)) source = detail::load_source(cfg);
  const auto kb = detail::load_knowledge_if_needed(cfg);
  const FeatureContext ctx{cfg.groups, kb ? &*kb : nullptr};
  const Corpus* src = source ? &*source : nullptr;

  double lambda = 0.0;
  if (const auto fixed = cfg.fixed_lambda()) {
    lambda = *fixed;
  } else {
    const auto dev = read_corpus(
        detail::require(cfg.target_dev, "corpus.target_dev (needed by crf.lambda = auto)"),
        CorpusFormat::Segmented);
    lambda = select_lambda(cfg, src, target, dev, ctx);
  }
  const auto model = train_adapted(cfg.mode, src, target, ctx, cfg.crf_config(lambda));

  model.model.save(model_file);
  if (model.source_model) model.source_model->save(source_model_path(model_file));

  nlohmann::json manifest;
  manifest["format"] = "cws-manifest";
  manifest["version"] = 1;
  manifest["mode"] = std::string(mode_name(cfg.mode));
  manifest["feature_groups"] = cfg.groups.to_string();
  manifest["lambda"] = lambda;
  manifest["config"] = cfg.serialize();
  manifest["checksums"]["target_train"] = io::checksum_path(cfg.target_train);
  if (src) manifest["checksums"]["source"] = io::checksum_path(cfg.source);
  if (kb) manifest["checksums"]["knowledge"] = io::checksum_path(cfg.knowledge);
  manifest["checksums"]["model"] = io::checksum_path(model_file);
  if (model.source_model) {
    manifest["source_model"] = source_model_path(model_file).filename().string();
    manifest["checksums"]["source_model"] = io::checksum_path(source_model_path(model_file));
  }
  io::atomic_write_file(manifest_path(model_file), manifest.dump(2) + "\n");
  return {lambda, model.model.registry().num_features()};
}

// Loads a trained model after checking its manifest against the supplied
// feature groups and knowledge archive.
inline AdaptedModel load_checked_model(const RunConfig& cfg, const fs::path& model_file) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_file(manifest_path(model_file)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::Parse, "manifest " + manifest_path(model_file).string() + ": " + e.what());
  }
  const auto groups = manifest.at("feature_groups").get<std::string>();
  if (groups != cfg.groups.to_string()) {
    throw Error(ErrorCategory::Mismatch, "model was trained with feature groups " + groups +
                                             " but " + cfg.groups.to_string() + " were supplied");
  }
  if (cfg.groups.needs_knowledge()) {
    const auto sum = io::checksum_path(detail::require(cfg.knowledge, "knowledge.archive"));
    if (!manifest["checksums"].contains("knowledge") ||
        manifest["checksums"]["knowledge"].get<std::string>() != sum) {
      throw Error(ErrorCategory::Mismatch, "knowledge archive " + cfg.knowledge +
                                               " does not match the one the model was trained with");
    }
  }
  if (manifest["checksums"]["model"].get<std::string>() != io::checksum_path(model_file)) {
    throw Error(ErrorCategory::Mismatch, "model file " + model_file.string() + " does not match its manifest");
  }
  AdaptedModel model;
  model.mode = parse_mode(manifest.at("mode").get<std::string>());
  model.model = CrfModel::load(model_file);
  if (model.mode == AdaptationMode::Transit) {
    model.source_model = CrfModel::load(source_model_path(model_file));
  }
  return model;
}

// Segments a raw corpus (file or directory). Output mirrors the input: one
// file per document, blank lines preserved.
inline void cmd_segment(const RunConfig& cfg, const fs::path& model_file, const fs::path& input,
                        const fs::path& output) {
  const auto model = load_checked_model(cfg, model_file);
  const auto kb = detail::load_knowledge_if_needed(cfg);
  const FeatureContext ctx{cfg.groups, kb ? &*kb : nullptr};
  const auto corpus = read_corpus(input, CorpusFormat::Raw);
  const bool single_file = fs::is_regular_file(input);
  for (const auto& doc : corpus) {
    std::ostringstream out;
    write_segmented_document(out, doc, model.segment(doc, ctx));
    io::atomic_write_file(single_file ? output : output / doc.file_name, out.str());
  }
}

inline constexpr std::string_view kEvalHeader =
    "precision,recall,f1,oov_recall,gold_words,predicted_words,correct_words,gold_oov,correct_oov";

inline std::string eval_report(const SegScore& s) {
  const auto& c = s.counts;
  return std::string(kEvalHeader) + "\n" + format_percent(s.precision) + "," +
         format_percent(s.recall) + "," + format_percent(s.f1) + "," + format_oov(s.oov_recall) +
         "," + std::to_string(c.gold_words) + "," + std::to_string(c.predicted_words) + "," +
         std::to_string(c.correct_words) + "," + std::to_string(c.gold_oov) + "," +
         std::to_string(c.correct_oov) + "\n";
}

inline SegScore cmd_eval(const fs::path& gold, const fs::path& pred,
                         const std::optional<fs::path>& ref_vocab, CorpusFormat ref_format,
                         const std::optional<fs::path>& report) {
  const auto g = read_corpus(gold, CorpusFormat::Segmented);
  const auto p = read_corpus(pred, CorpusFormat::Segmented);
  std::optional<Vocabulary> vocab;
  if (ref_vocab) vocab = vocabulary(read_corpus(*ref_vocab, ref_format));
  const auto s = score_corpus(g, p, vocab ? &*vocab : nullptr);
  if (report) io::atomic_write_file(*report, eval_report(s));
  return s;
}

inline std::vector<CurvePoint> cmd_curve(const RunConfig& cfg) {
  const auto source = detail::load_source(cfg);
  const auto train = read_corpus(detail::require(cfg.target_train, "corpus.target_train"),
                                 CorpusFormat::Segmented);
  const auto dev = read_corpus(detail::require(cfg.target_dev, "corpus.target_dev"), CorpusFormat::Segmented);
  const auto kb = detail::load_knowledge_if_needed(cfg);
  if (cfg.sizes.empty()) throw Error(ErrorCategory::Config, "curve.sizes is empty");
  if (cfg.curve_modes.empty()) throw Error(ErrorCategory::Config, "curve.modes is empty");
  const auto& report = detail::require(cfg.report, "output.report");

  CurveSetup setup;
  setup.source = &source;
  setup.target_train = &train;
  setup.target_dev = &dev;
  setup.sizes = cfg.sizes;
  setup.modes = cfg.curve_modes;
  setup.features = {cfg.groups, kb ? &*kb : nullptr};
  const double lambda = cfg.fixed_lambda()
                            ? *cfg.fixed_lambda()
                            : select_lambda(cfg, &source, train, dev, setup.features, AdaptationMode::Target);
  setup.crf = cfg.crf_config(lambda);
  const auto points = run_curve(setup);
  io::atomic_write_file(report, curve_report(points));
  if (!cfg.plot.empty()) io::atomic_write_file(cfg.plot, curve_plot_data(points));
  return points;
}

}  // namespace cws
