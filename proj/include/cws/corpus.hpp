#pragma once

// Text data model for character-based segmentation: characters and their
// types, BMES label sequences, and directory-backed corpora where each file
// is one document.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cws/error.hpp"
#include "cws/utf8.hpp"

namespace cws {

using Character = char32_t;
using Sentence = std::u32string;

enum class CharType : std::uint8_t { Number, Hanzi, Letter, Other };

inline std::string_view char_type_name(CharType t) {
  switch (t) {
    case CharType::Number: return "Number";
    case CharType::Hanzi: return "Hanzi";
    case CharType::Letter: return "Letter";
    case CharType::Other: return "Other";
  }
  return "Other";
}

// Closed set of characters treated as numerals even though they are ideographs.
inline constexpr std::u32string_view kChineseNumerals =
    U"〇一二三四五六七八九十百千万亿两壹贰叁肆伍陆柒捌玖拾佰仟萬";

inline bool is_cjk_ideograph(Character c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0x2A700 && c <= 0x2EBEF) ||
         (c >= 0x30000 && c <= 0x3134F) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x2F800 && c <= 0x2FA1F);
}

inline CharType classify_char(Character c) {
  if ((c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19)) return CharType::Number;
  if (kChineseNumerals.find(c) != std::u32string_view::npos) return CharType::Number;
  if (is_cjk_ideograph(c)) return CharType::Hanzi;
  if ((c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z') || (c >= 0xFF21 && c <= 0xFF3A) ||
      (c >= 0xFF41 && c <= 0xFF5A)) {
    return CharType::Letter;
  }
  return CharType::Other;
}

inline std::vector<CharType> classify_sentence(const Sentence& sent) {
  std::vector<CharType> types(sent.size());
  std::transform(sent.begin(), sent.end(), types.begin(), classify_char);
  return types;
}

enum class Label : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };

inline constexpr std::size_t kNumLabels = 4;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {Label::B, Label::M, Label::E,
                                                             Label::S};

inline char label_char(Label l) { return "BMES"[static_cast<int>(l)]; }

inline Label label_from_char(char c) {
  switch (c) {
    case 'B': return Label::B;
    case 'M': return Label::M;
    case 'E': return Label::E;
    case 'S': return Label::S;
    default: break;
  }
  throw Error(ErrorCategory::Parse, std::string("unknown label '") + c + "'");
}

using LabeledSequence = std::vector<Label>;

inline bool is_well_formed(const LabeledSequence& labels) {
  bool open = false;
  for (Label l : labels) {
    switch (l) {
      case Label::B:
        if (open) return false;
        open = true;
        break;
      case Label::M:
        if (!open) return false;
        break;
      case Label::E:
        if (!open) return false;
        open = false;
        break;
      case Label::S:
        if (open) return false;
        break;
    }
  }
  return !open;
}

struct SegmentedSentence {
  std::vector<std::u32string> words;
  // Either empty (untagged) or one POS tag per word.
  std::vector<std::string> tags;

  Sentence text() const {
    Sentence out;
    for (const auto& w : words) out += w;
    return out;
  }

  bool operator==(const SegmentedSentence&) const = default;
};

inline LabeledSequence encode_bmes(const SegmentedSentence& s) {
  LabeledSequence labels;
  for (const auto& w : s.words) {
    if (w.empty()) throw Error(ErrorCategory::Precondition, "encode_bmes: empty word");
    if (w.size() == 1) {
      labels.push_back(Label::S);
      continue;
    }
    labels.push_back(Label::B);
    labels.insert(labels.end(), w.size() - 2, Label::M);
    labels.push_back(Label::E);
  }
  return labels;
}

// Ill-formed input is repaired left to right: a label that cannot continue the
// open word closes it first; M/E with no open word act as B/S; a word still
// open at the end is closed. Every character lands in exactly one word.
inline SegmentedSentence decode_bmes(const Sentence& sent, const LabeledSequence& labels) {
  if (sent.size() != labels.size()) {
    throw Error(ErrorCategory::Precondition,
                "decode_bmes: " + std::to_string(sent.size()) + " characters but " +
                    std::to_string(labels.size()) + " labels");
  }
  SegmentedSentence out;
  std::size_t start = 0;
  bool open = false;
  const auto close = [&](std::size_t end) {
    out.words.emplace_back(sent.substr(start, end - start));
    open = false;
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    switch (labels[i]) {
      case Label::B:
        if (open) close(i);
        start = i;
        open = true;
        break;
      case Label::M:
        if (!open) {
          start = i;
          open = true;
        }
        break;
      case Label::E:
        if (!open) start = i;
        close(i + 1);
        break;
      case Label::S:
        if (open) close(i);
        start = i;
        close(i + 1);
        break;
    }
  }
  if (open) close(labels.size());
  return out;
}

struct Document {
  std::string id;
  std::string file_name;
  std::vector<Sentence> sentences;
  // Parallel to `sentences` for segmented/tagged corpora, empty for raw ones.
  std::vector<SegmentedSentence> segmented;
  // 1-based source line of each sentence, and the file's total line count.
  std::vector<std::size_t> lines;
  std::size_t line_count = 0;

  bool is_segmented() const { return !segmented.empty(); }

  std::size_t char_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  std::size_t word_count() const {
    std::size_t n = 0;
    for (const auto& s : segmented) n += s.words.size();
    return n;
  }
};

using Corpus = std::vector<Document>;

enum class CorpusFormat { Segmented, Raw, Tagged };

inline CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "segmented") return CorpusFormat::Segmented;
  if (name == "raw") return CorpusFormat::Raw;
  if (name == "tagged") return CorpusFormat::Tagged;
  throw Error(ErrorCategory::Config, "unknown corpus format '" + std::string(name) + "'");
}

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(' ', pos);
    parts.push_back(line.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

}  // namespace detail

// Parses one line of a segmented (or `word/TAG` tagged) corpus. Throws a
// Parse error with a bare message; callers prefix file and line.
inline SegmentedSentence parse_segmented_line(std::string_view line, bool tagged) {
  SegmentedSentence out;
  for (auto token : detail::split_spaces(line)) {
    if (token.empty()) throw Error(ErrorCategory::Parse, "empty word (doubled or stray space)");
    if (tagged) {
      const auto slash = token.rfind('/');
      if (slash == std::string_view::npos || slash == 0 || slash + 1 == token.size()) {
        throw Error(ErrorCategory::Parse,
                    "token '" + std::string(token) + "' is not of the form word/TAG");
      }
      out.tags.emplace_back(token.substr(slash + 1));
      token = token.substr(0, slash);
    }
    out.words.push_back(utf8::decode(token));
  }
  return out;
}

inline std::string format_segmented_line(const SegmentedSentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.words.size(); ++i) {
    if (i) out.push_back(' ');
    out += utf8::encode(s.words[i]);
    if (!s.tags.empty()) {
      out.push_back('/');
      out += s.tags[i];
    }
  }
  return out;
}

inline Document parse_document(std::istream& in, std::string id, CorpusFormat format,
                               const std::string& origin) {
  Document doc;
  doc.id = std::move(id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      if (format == CorpusFormat::Raw) {
        doc.sentences.push_back(utf8::decode(line));
      } else {
        auto seg = parse_segmented_line(line, format == CorpusFormat::Tagged);
        doc.sentences.push_back(seg.text());
        doc.segmented.push_back(std::move(seg));
      }
    } catch (const Error& e) {
      throw Error(ErrorCategory::Parse, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    doc.lines.push_back(lineno);
  }
  doc.line_count = lineno;
  if (doc.sentences.empty()) {
    throw Error(ErrorCategory::Parse, origin + ": document has no sentences");
  }
  return doc;
}

inline Document read_document(const std::filesystem::path& file, CorpusFormat format) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open " + file.string());
  auto doc = parse_document(in, file.stem().string(), format, file.string());
  doc.file_name = file.filename().string();
  return doc;
}

// A corpus is a directory of documents, read in lexicographic filename order.
// A plain file is accepted as a one-document corpus.
inline Corpus read_corpus(const std::filesystem::path& location, CorpusFormat format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(location, ec)) return {read_document(location, format)};
  if (!fs::is_directory(location, ec)) {
    throw Error(ErrorCategory::Io, "corpus location does not exist: " + location.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(location)) {
    if (entry.is_regular_file() && entry.path().filename().string().front() != '.') {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  Corpus corpus;
  std::unordered_set<std::string> ids;
  for (const auto& f : files) {
    corpus.push_back(read_document(f, format));
    if (!ids.insert(corpus.back().id).second) {
      throw Error(ErrorCategory::Parse, "duplicate document id '" + corpus.back().id + "' in " +
                                            location.string());
    }
  }
  if (corpus.empty()) throw Error(ErrorCategory::Io, "corpus is empty: " + location.string());
  return corpus;
}

// Writes a segmented document, restoring the blank lines recorded at load time.
inline void write_segmented_document(std::ostream& out, const Document& doc,
                                     const std::vector<SegmentedSentence>& sentences) {
  std::size_t line = 1;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const std::size_t target = s < doc.lines.size() ? doc.lines[s] : line;
    for (; line < target; ++line) out << '\n';
    out << format_segmented_line(sentences[s]) << '\n';
    ++line;
  }
  for (; line <= doc.line_count; ++line) out << '\n';
}

inline std::size_t corpus_word_count(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& d : corpus) n += d.word_count();
  return n;
}

inline std::unordered_set<std::u32string> vocabulary(const Corpus& corpus) {
  std::unordered_set<std::u32string> vocab;
  for (const auto& d : corpus) {
    for (const auto& s : d.segmented) vocab.insert(s.words.begin(), s.words.end());
  }
  return vocab;
}

inline Document strip_tags(Document doc) {
  for (auto& s : doc.segmented) s.tags.clear();
  return doc;
}

}  // namespace cws
