// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "patchtriage/error.hpp"

namespace patchtriage {

using TokenSeq = std::vector<std::string>;

struct MarkedLine {
  char marker = '+';  // '+' or '-'
  std::string text;   // line content after the marker, verbatim

  friend bool operator==(const MarkedLine&, const MarkedLine&) = default;
};

/// A contiguous run of added/removed lines. Never holds context lines.
struct Hunk {
  std::vector<MarkedLine> lines;

  friend bool operator==(const Hunk&, const Hunk&) = default;
};

namespace detail {

enum class CharClass { upper, lower, digit, other };

inline CharClass classify(unsigned char c) noexcept {
  if (c >= 'A' && c <= 'Z') return CharClass::upper;
  if (c >= 'a' && c <= 'z') return CharClass::lower;
  if (c >= '0' && c <= '9') return CharClass::digit;
  // Non-ASCII bytes stay inside words so UTF-8 sequences are never cut.
  if (c >= 0x80) return CharClass::lower;
  return CharClass::other;
}

inline bool is_letter(CharClass c) noexcept { return c == CharClass::upper || c == CharClass::lower; }

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Splits one alphanumeric run into camelCase / letter-digit subtokens.
inline void split_word(std::string_view word, TokenSeq& out) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < word.size(); ++i) {
    const CharClass prev = classify(static_cast<unsigned char>(word[i - 1]));
    const CharClass cur = classify(static_cast<unsigned char>(word[i]));
    bool boundary = false;
    if (prev == CharClass::lower && cur == CharClass::upper) {
      boundary = true;
    } else if (is_letter(prev) != is_letter(cur)) {
      boundary = true;  // letter <-> digit
    } else if (prev == CharClass::upper && cur == CharClass::upper && i + 1 < word.size() &&
               classify(static_cast<unsigned char>(word[i + 1])) == CharClass::lower) {
      boundary = true;  // "XMLParser": split before 'P'
    }
    if (boundary) {
      out.push_back(ascii_lower(word.substr(start, i - start)));
      start = i;
    }
  }
  out.push_back(ascii_lower(word.substr(start)));
}

inline constexpr std::array<std::string_view, 6> kOperators = {"==", "!=", "<=", ">=", "&&", "||"};

}  // namespace detail

/// Lexical split used by both test and hunk tokenization. May return an
/// empty sequence (e.g. for a line holding only "}").
inline TokenSeq split_tokens(std::string_view source) {
  TokenSeq tokens;
  std::size_t i = 0;
  while (i < source.size()) {
    const auto c = static_cast<unsigned char>(source[i]);
    if (detail::classify(c) != detail::CharClass::other) {
      std::size_t j = i;
      while (j < source.size() &&
             detail::classify(static_cast<unsigned char>(source[j])) != detail::CharClass::other) {
        ++j;
      }
      detail::split_word(source.substr(i, j - i), tokens);
      i = j;
      continue;
    }
    bool matched = false;
    if (i + 1 < source.size()) {
      const std::string_view pair = source.substr(i, 2);
      for (std::string_view op : detail::kOperators) {
        if (pair == op) {
          tokens.emplace_back(op);
          i += 2;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  return tokens;
}

/// Tokenizes a test method's source. Throws EmptyTokens when nothing but
/// punctuation remains.
inline TokenSeq tokenize_test(std::string_view source) {
  TokenSeq tokens = split_tokens(source);
  if (tokens.empty()) {
    throw Error(ErrorKind::empty_tokens, "source yields no tokens");
  }
  return tokens;
}

/// Extracts the added/removed lines of a unified diff, grouped into hunks.
///
/// File headers ("--- a" immediately followed by "+++ b"), "@@" section
/// headers, git preamble lines and context lines are dropped. A context line,
/// a section header or any other unmarked line closes the current hunk.
/// "\ No newline at end of file" and marked lines that are blank after the
/// marker are skipped without closing the hunk.
inline std::vector<Hunk> parse_diff(std::string_view diff_text) {
  std::vector<std::string_view> lines;
  {
    std::size_t pos = 0;
    while (pos <= diff_text.size()) {
      std::size_t nl = diff_text.find('\n', pos);
      if (nl == std::string_view::npos) nl = diff_text.size();
      std::string_view line = diff_text.substr(pos, nl - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      pos = nl + 1;
    }
    if (!diff_text.empty() && diff_text.back() == '\n') lines.pop_back();
  }

  const auto starts_with = [](std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; };
  const auto is_blank = [](std::string_view s) {
    return s.find_first_not_of(" \t\f\v") == std::string_view::npos;
  };

  std::vector<Hunk> hunks;
  Hunk current;
  const auto close = [&] {
    if (!current.lines.empty()) hunks.push_back(std::move(current));
    current = Hunk{};
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (starts_with(line, "--- ") || line == "---") {
      if (i + 1 < lines.size() && starts_with(lines[i + 1], "+++")) {
        close();
        ++i;
        continue;
      }
    }
    if (starts_with(line, "\\")) continue;
    if (!line.empty() && (line[0] == '+' || line[0] == '-')) {
      const std::string_view text = line.substr(1);
      if (is_blank(text)) continue;
      current.lines.push_back(MarkedLine{line[0], std::string(text)});
      continue;
    }
    close();
  }
  close();

  if (hunks.empty()) {
    throw Error(ErrorKind::no_changed_lines, "diff contains no added or removed lines");
  }
  return hunks;
}

/// Marker as a standalone token, then the line's tokens, line by line.
inline TokenSeq tokenize_hunk(const Hunk& hunk) {
  TokenSeq tokens;
  for (const MarkedLine& line : hunk.lines) {
    tokens.emplace_back(1, line.marker);
    TokenSeq line_tokens = split_tokens(line.text);
    tokens.insert(tokens.end(), std::make_move_iterator(line_tokens.begin()),
                  std::make_move_iterator(line_tokens.end()));
  }
  return tokens;
}

}  // namespace patchtriage
