// cws: command-line front end for knowledge extraction, training,
// segmentation, evaluation and learning-curve experiments.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cws/commands.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;

  cws::RunConfig resolve() const {
    auto cfg = config.empty() ? cws::RunConfig{} : cws::RunConfig::load(config);
    for (const auto& o : overrides) cfg.apply_override(o);
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a setting: section.key=value (repeatable)");
}

void print_score(const cws::SegScore& s) {
  std::cout << "P=" << cws::format_percent(s.precision) << " R=" << cws::format_percent(s.recall)
            << " F1=" << cws::format_percent(s.f1) << " R_OOV=" << cws::format_oov(s.oov_recall)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-based CRF word segmentation toolkit"};
  app.require_subcommand(1);

  CommonOptions knowledge_opts, train_opts, segment_opts, eval_opts, curve_opts;

  auto* extract = app.add_subcommand("extract-knowledge", "Build the POS/dictionary/similarity archive");
  add_common(extract, knowledge_opts);

  auto* train = app.add_subcommand("train", "Train a segmentation model");
  add_common(train, train_opts);

  auto* segment = app.add_subcommand("segment", "Segment a raw corpus");
  add_common(segment, segment_opts);
  std::string seg_model, seg_input, seg_output;
  segment->add_option("--model", seg_model, "Model file (defaults to output.model)");
  segment->add_option("--input", seg_input, "Raw corpus file or directory")->required();
  segment->add_option("--output", seg_output, "Output file or directory")->required();

  auto* eval = app.add_subcommand("eval", "Score a segmentation against gold");
  add_common(eval, eval_opts);
  std::string gold, pred, ref_vocab, ref_format = "segmented", eval_report;
  eval->add_option("--gold", gold, "Gold segmented corpus")->required();
  eval->add_option("--pred", pred, "Predicted segmented corpus")->required();
  eval->add_option("--ref-vocab", ref_vocab, "Corpus whose word types define in-vocabulary words");
  eval->add_option("--ref-format", ref_format, "Format of the reference corpus (segmented|tagged)");
  eval->add_option("--report", eval_report, "Write the score table here (defaults to output.report)");

  auto* curve = app.add_subcommand("curve", "Run the learning-curve experiment");
  add_common(curve, curve_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return cws::exit_code(cws::ErrorCategory::Usage);
  }

  try {
    if (*extract) {
      const auto kb = cws::cmd_extract_knowledge(knowledge_opts.resolve());
      std::cout << "knowledge: " << kb.cpos.size() << " C_POS entries, " << kb.dict.size()
                << " dictionary words, " << kb.sim.vocabulary.size() << " characters x "
                << kb.sim.dimension() << " dims\n";
    } else if (*train) {
      const auto summary = cws::cmd_train(train_opts.resolve());
      std::cout << "trained: lambda=" << summary.lambda << " features=" << summary.features << '\n';
    } else if (*segment) {
      const auto cfg = segment_opts.resolve();
      const std::string model = seg_model.empty() ? cfg.model : seg_model;
      if (model.empty()) throw cws::Error(cws::ErrorCategory::Config, "no model given (--model or output.model)");
      cws::cmd_segment(cfg, model, seg_input, seg_output);
    } else if (*eval) {
      const auto cfg = eval_opts.resolve();
      std::optional<std::filesystem::path> vocab, report;
      if (!ref_vocab.empty()) vocab = ref_vocab;
      if (!eval_report.empty()) {
        report = eval_report;
      } else if (!cfg.report.empty()) {
        report = cfg.report;
      }
      print_score(cws::cmd_eval(gold, pred, vocab, cws::parse_corpus_format(ref_format), report));
    } else if (*curve) {
      const auto points = cws::cmd_curve(curve_opts.resolve());
      std::cout << cws::curve_report(points);
    }
  } catch (const cws::Error& e) {
    std::cerr << "error: " << cws::category_name(e.category()) << ": " << e.what() << '\n';
    return cws::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return cws::exit_code(cws::ErrorCategory::Io);
  }
  return 0;
}
