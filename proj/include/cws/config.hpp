#pragma once

// Run configuration: a flat `key = value` text format grouped in [sections].
// Lines starting with '#' or ';' are comments. Command-line overrides use
// `section.key=value`.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cws/adaptation.hpp"
#include "cws/io.hpp"

namespace cws {

struct RunConfig {
  // [corpus]
  std::string source;
  std::string source_format = "tagged";
  std::string target_train;
  std::string target_dev;
  std::string target_test;
  // [features]
  FeatureGroups groups;
  // [adaptation]
  AdaptationMode mode = AdaptationMode::Target;
  // [crf]; lambda is either a number or "auto" (held-out grid search).
  std::string lambda = "auto";
  std::vector<double> lambda_grid{0.01, 0.1, 1.0};
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;
  std::size_t min_feature_freq = 1;
  // [knowledge]
  std::string knowledge;
  std::size_t sim_k = 50;
  // [curve]
  std::vector<std::size_t> sizes;
  std::vector<AdaptationMode> curve_modes{AdaptationMode::Target, AdaptationMode::All,
                                          AdaptationMode::Transit, AdaptationMode::Easy};
  // [output]
  std::string model;
  std::string report;
  std::string plot;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::string serialize() const;

  static RunConfig parse(std::string_view text, const std::string& origin = "config");
  static RunConfig load(const std::filesystem::path& path) {
    return parse(io::read_file(path), path.string());
  }

  // Applies a `section.key=value` override.
  void apply_override(std::string_view assignment);

  std::optional<double> fixed_lambda() const {
    if (lambda == "auto") return std::nullopt;
    return std::stod(lambda);
  }

  CrfConfig crf_config(double lam) const {
    CrfConfig c;
    c.lambda = lam;
    c.max_iterations = max_iterations;
    c.tolerance = tolerance;
    c.min_feature_freq = min_feature_freq;
    return c;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) {
    throw Error(ErrorCategory::Config, "bad value for " + key + ": '" + value + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace detail

inline void RunConfig::set(const std::string& section, const std::string& key,
                           const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "corpus") {
    if (key == "source") return void(source = value);
    if (key == "source_format") {
      parse_corpus_format(value);
      return void(source_format = value);
    }
    if (key == "target_train") return void(target_train = value);
    if (key == "target_dev") return void(target_dev = value);
    if (key == "target_test") return void(target_test = value);
  } else if (section == "features") {
    if (key == "groups") return void(groups = FeatureGroups::parse(value));
  } else if (section == "adaptation") {
    if (key == "mode") return void(mode = parse_mode(value));
  } else if (section == "crf") {
    if (key == "lambda") {
      if (value != "auto") detail::parse_number<double>(full, value);
      return void(lambda = value);
    }
    if (key == "lambda_grid") {
      lambda_grid.clear();
      for (const auto& v : detail::split_list(value)) lambda_grid.push_back(detail::parse_number<double>(full, v));
      if (lambda_grid.empty()) throw Error(ErrorCategory::Config, full + " must not be empty");
      return;
    }
    if (key == "max_iterations") return void(max_iterations = detail::parse_number<std::size_t>(full, value));
    if (key == "tolerance") return void(tolerance = detail::parse_number<double>(full, value));
    if (key == "min_feature_freq") return void(min_feature_freq = detail::parse_number<std::size_t>(full, value));
  } else if (section == "knowledge") {
    if (key == "archive") return void(knowledge = value);
    if (key == "sim_k") return void(sim_k = detail::parse_number<std::size_t>(full, value));
  } else if (section == "curve") {
    if (key == "sizes") {
      sizes.clear();
      for (const auto& v : detail::split_list(value)) sizes.push_back(detail::parse_number<std::size_t>(full, v));
      return;
    }
    if (key == "modes") {
      curve_modes.clear();
      for (const auto& v : detail::split_list(value)) curve_modes.push_back(parse_mode(v));
      return;
    }
  } else if (section == "output") {
    if (key == "model") return void(model = value);
    if (key == "report") return void(report = value);
    if (key == "plot") return void(plot = value);
  }
  throw Error(ErrorCategory::Config, "unknown config key '" + full + "'");
}

inline RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto where = origin + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorCategory::Config, where + ": malformed section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorCategory::Config, where + ": expected key = value");
    if (section.empty()) throw Error(ErrorCategory::Config, where + ": key outside of a section");
    try {
      cfg.set(section, detail::trim(std::string_view(t).substr(0, eq)),
              detail::trim(std::string_view(t).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.category(), where + ": " + e.what());
    }
  }
  return cfg;
}

inline void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw Error(ErrorCategory::Usage, "override must look like section.key=value: '" +
                                          std::string(assignment) + "'");
  }
  set(detail::trim(assignment.substr(0, dot)), detail::trim(assignment.substr(dot + 1, eq - dot - 1)),
      detail::trim(assignment.substr(eq + 1)));
}

inline std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "[corpus]\n"
      << "source = " << source << '\n'
      << "source_format = " << source_format << '\n'
      << "target_train = " << target_train << '\n'
      << "target_dev = " << target_dev << '\n'
      << "target_test = " << target_test << '\n'
      << "\n[features]\n"
      << "groups = " << groups.to_string() << '\n'
      << "\n[adaptation]\n"
      << "mode = " << mode_name(mode) << '\n'
      << "\n[crf]\n"
      << "lambda = " << lambda << '\n'
      << "lambda_grid = " << detail::join(lambda_grid, detail::format_double) << '\n'
      << "max_iterations = " << max_iterations << '\n'
      << "tolerance = " << detail::format_double(tolerance) << '\n'
      << "min_feature_freq = " << min_feature_freq << '\n'
      << "\n[knowledge]\n"
      << "archive = " << knowledge << '\n'
      << "sim_k = " << sim_k << '\n'
      << "\n[curve]\n"
      << "sizes = " << detail::join(sizes, [](std::size_t v) { return std::to_string(v); }) << '\n'
      << "modes = " << detail::join(curve_modes, [](AdaptationMode m) { return std::string(mode_name(m)); })
      << '\n'
      << "\n[output]\n"
      << "model = " << model << '\n'
      << "report = " << report << '\n'
      << "plot = " << plot << '\n';
  return out.str();
}

}  // namespace cws
