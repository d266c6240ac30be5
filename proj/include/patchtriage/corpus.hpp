// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <charconv>
#include <compare>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "patchtriage/error.hpp"
#include "patchtriage/textprep.hpp"

namespace patchtriage {

struct BugId {
  std::string project;
  long number = 0;

  std::string str() const { return project + "-" + std::to_string(number); }

  /// Parses "<project>-<number>"; the project itself may contain dashes.
  static BugId parse(std::string_view text) {
    const auto dash = text.rfind('-');
    if (dash == std::string_view::npos || dash == 0 || dash + 1 == text.size()) {
      throw Error(ErrorKind::parse, "malformed bug id '" + std::string(text) + "'");
    }
    long number = 0;
    const char* first = text.data() + dash + 1;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, number);
    if (ec != std::errc{} || ptr != last || number <= 0) {
      throw Error(ErrorKind::parse, "malformed bug number in '" + std::string(text) + "'");
    }
    return BugId{std::string(text.substr(0, dash)), number};
  }

  friend bool operator==(const BugId&, const BugId&) = default;
  friend auto operator<=>(const BugId&, const BugId&) = default;
};

struct BugIdHash {
  std::size_t operator()(const BugId& b) const noexcept {
    return std::hash<std::string>{}(b.project) ^ (std::hash<long>{}(b.number) * 0x9e3779b97f4a7c15ULL);
  }
};

struct TestCase {
  std::string id;
  BugId bug;
  std::string name;
  std::string source;
};

enum class Label { correct, incorrect, unlabeled };

inline std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::correct: return "correct";
    case Label::incorrect: return "incorrect";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

inline std::optional<Label> parse_label(std::string_view s) noexcept {
  if (s == "correct") return Label::correct;
  if (s == "incorrect") return Label::incorrect;
  if (s == "unlabeled") return Label::unlabeled;
  return std::nullopt;
}

struct Patch {
  std::string id;
  BugId bug;
  std::vector<Hunk> hunks;
  std::string origin;
  Label label = Label::unlabeled;
  std::string diff;  // original unified-diff text; hunks are derived from it
};

struct Link {
  std::string test_id;
  std::string patch_id;
};

/// Validated, immutable collection of historical tests, patches and the
/// test -> correct patch links. Iteration order is file order per record kind.
class Corpus {
 public:
  Corpus() = default;

  /// Validates and indexes; throws ValidationError on any broken invariant.
  Corpus(std::vector<TestCase> tests, std::vector<Patch> patches, std::vector<Link> links)
      : tests_(std::move(tests)), patches_(std::move(patches)), links_(std::move(links)) {
    for (std::size_t i = 0; i < tests_.size(); ++i) {
      const TestCase& t = tests_[i];
      if (t.id.empty()) throw Error(ErrorKind::validation, "test with empty id");
      if (t.source.empty()) throw Error(ErrorKind::validation, "test '" + t.id + "' has empty source");
      if (t.bug.project.empty() || t.bug.number <= 0) {
        throw Error(ErrorKind::validation, "test '" + t.id + "' has an invalid bug id");
      }
      if (!test_index_.emplace(t.id, i).second) {
        throw Error(ErrorKind::validation, "duplicate test id '" + t.id + "'");
      }
    }
    for (std::size_t i = 0; i < patches_.size(); ++i) {
      const Patch& p = patches_[i];
      if (p.id.empty()) throw Error(ErrorKind::validation, "patch with empty id");
      if (p.bug.project.empty() || p.bug.number <= 0) {
        throw Error(ErrorKind::validation, "patch '" + p.id + "' has an invalid bug id");
      }
      if (p.hunks.empty()) throw Error(ErrorKind::validation, "patch '" + p.id + "' has no hunks");
      for (const Hunk& h : p.hunks) {
        if (h.lines.empty()) throw Error(ErrorKind::validation, "patch '" + p.id + "' has an empty hunk");
      }
      if (!patch_index_.emplace(p.id, i).second) {
        throw Error(ErrorKind::validation, "duplicate patch id '" + p.id + "'");
      }
    }
    for (const Link& l : links_) {
      const auto t = test_index_.find(l.test_id);
      if (t == test_index_.end()) {
        throw Error(ErrorKind::validation, "link references missing test id '" + l.test_id + "'");
      }
      const auto p = patch_index_.find(l.patch_id);
      if (p == patch_index_.end()) {
        throw Error(ErrorKind::validation, "link references missing patch id '" + l.patch_id + "'");
      }
      if (patches_[p->second].label != Label::correct) {
        throw Error(ErrorKind::validation, "linked patch '" + l.patch_id + "' is not labeled correct");
      }
      if (!link_of_test_.emplace(l.test_id, p->second).second) {
        throw Error(ErrorKind::validation, "test '" + l.test_id + "' is linked more than once");
      }
    }
  }

  const std::vector<TestCase>& tests() const noexcept { return tests_; }
  const std::vector<Patch>& patches() const noexcept { return patches_; }
  const std::vector<Link>& links() const noexcept { return links_; }

  const TestCase* find_test(const std::string& id) const {
    const auto it = test_index_.find(id);
    return it == test_index_.end() ? nullptr : &tests_[it->second];
  }
  const Patch* find_patch(const std::string& id) const {
    const auto it = patch_index_.find(id);
    return it == patch_index_.end() ? nullptr : &patches_[it->second];
  }
  /// The correct patch a test is linked to, if any.
  const Patch* linked_patch(const std::string& test_id) const {
    const auto it = link_of_test_.find(test_id);
    return it == link_of_test_.end() ? nullptr : &patches_[it->second];
  }

  /// Failing tests recorded for one bug, in file order.
  std::vector<TestCase> tests_of(const BugId& bug) const {
    std::vector<TestCase> out;
    for (const TestCase& t : tests_) {
      if (t.bug == bug) out.push_back(t);
    }
    return out;
  }

 private:
  std::vector<TestCase> tests_;
  std::vector<Patch> patches_;
  std::vector<Link> links_;
  std::unordered_map<std::string, std::size_t> test_index_;
  std::unordered_map<std::string, std::size_t> patch_index_;
  std::unordered_map<std::string, std::size_t> link_of_test_;
};

enum class Scope { all_projects, other_projects_only };

inline std::string_view to_string(Scope s) noexcept {
  return s == Scope::all_projects ? "all_projects" : "other_projects_only";
}

struct SearchEntry {
  TestCase test;
  Patch patch;
};

struct SearchSpace {
  std::vector<SearchEntry> entries;
  std::optional<BugId> excluded_bug;
  Scope scope = Scope::all_projects;
};

/// Leave-one-out search space: drops every link of `exclude` and, under
/// other_projects_only, every link from the same project. Link order kept.
inline SearchSpace make_search_space(const Corpus& corpus, const BugId& exclude, Scope scope) {
  SearchSpace space;
  space.excluded_bug = exclude;
  space.scope = scope;
  for (const Link& link : corpus.links()) {
    const TestCase* test = corpus.find_test(link.test_id);
    const Patch* patch = corpus.find_patch(link.patch_id);
    if (test->bug == exclude || patch->bug == exclude) continue;
    if (scope == Scope::other_projects_only &&
        (test->bug.project == exclude.project || patch->bug.project == exclude.project)) {
      continue;
    }
    space.entries.push_back(SearchEntry{*test, *patch});
  }
  return space;
}

// ---------------------------------------------------------------------------
// JSONL reading and writing

namespace detail {

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

inline long require_bug_number(const nlohmann::json& j, std::size_t line_no) {
  const auto it = j.find("bug");
  if (it == j.end() || !it->is_number_integer() || it->get<long>() <= 0) {
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": field 'bug' must be a positive integer");
  }
  return it->get<long>();
}

inline nlohmann::json parse_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected a JSON object");
  return j;
}

inline bool is_blank_line(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

/// Builds a Patch from a "patch" record. `label_required` is false for
/// candidate files, where a missing label means unlabeled.
inline Patch patch_from_json(const nlohmann::json& j, std::size_t line_no, bool label_required) {
  Patch p;
  p.id = require_string(j, "id", line_no);
  p.bug = BugId{require_string(j, "project", line_no), require_bug_number(j, line_no)};
  p.origin = require_string(j, "origin", line_no);
  if (label_required || j.contains("label")) {
    const auto label = parse_label(require_string(j, "label", line_no));
    if (!label) throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": unknown label");
    p.label = *label;
  }
  p.diff = require_string(j, "diff", line_no);
  try {
    p.hunks = parse_diff(p.diff);
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, "patch '" + p.id + "' (line " + std::to_string(line_no) + "): " + e.what());
  }
  return p;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline Corpus read_corpus(std::istream& in) {
  std::vector<TestCase> tests;
  std::vector<Patch> patches;
  std::vector<Link> links;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_line(line)) continue;
    const nlohmann::json j = detail::parse_json_line(line, line_no);
    const std::string kind = detail::require_string(j, "kind", line_no);
    if (kind == "test") {
      TestCase t;
      t.id = detail::require_string(j, "id", line_no);
      t.bug = BugId{detail::require_string(j, "project", line_no), detail::require_bug_number(j, line_no)};
      t.name = detail::require_string(j, "name", line_no);
      t.source = detail::require_string(j, "source", line_no);
      tests.push_back(std::move(t));
    } else if (kind == "patch") {
      patches.push_back(detail::patch_from_json(j, line_no, true));
    } else if (kind == "link") {
      links.push_back(Link{detail::require_string(j, "test_id", line_no), detail::require_string(j, "patch_id", line_no)});
    } else {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
  }
  return Corpus(std::move(tests), std::move(patches), std::move(links));
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_corpus(in);
}

/// Candidate patches under triage: the corpus "patch" schema, label optional.
inline std::vector<Patch> read_candidates(std::istream& in) {
  std::vector<Patch> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_line(line)) continue;
    const nlohmann::json j = detail::parse_json_line(line, line_no);
    if (j.contains("kind") && j["kind"] != "patch") {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": candidates must be patch records");
    }
    Patch p = detail::patch_from_json(j, line_no, false);
    if (!seen.insert(p.id).second) throw Error(ErrorKind::validation, "duplicate candidate id '" + p.id + "'");
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<Patch> load_candidates(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_candidates(in);
}

inline nlohmann::ordered_json to_json(const TestCase& t) {
  return {{"kind", "test"}, {"id", t.id}, {"project", t.bug.project}, {"bug", t.bug.number},
          {"name", t.name}, {"source", t.source}};
}

inline nlohmann::ordered_json to_json(const Patch& p) {
  return {{"kind", "patch"},   {"id", p.id},         {"project", p.bug.project},
          {"bug", p.bug.number}, {"origin", p.origin}, {"label", std::string(to_string(p.label))},
          {"diff", p.diff}};
}

/// Canonical form: tests, then patches, then links, each in corpus order,
/// fixed key order, one compact object per line.
inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const TestCase& t : corpus.tests()) out << to_json(t).dump() << '\n';
  for (const Patch& p : corpus.patches()) out << to_json(p).dump() << '\n';
  for (const Link& l : corpus.links()) {
    nlohmann::ordered_json j = {{"kind", "link"}, {"test_id", l.test_id}, {"patch_id", l.patch_id}};
    out << j.dump() << '\n';
  }
}

inline std::string canonical_corpus(const Corpus& corpus) {
  std::ostringstream out;
  write_corpus(out, corpus);
  return out.str();
}

}  // namespace patchtriage
