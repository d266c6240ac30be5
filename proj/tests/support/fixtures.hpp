// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"

namespace patchtriage::testing {

inline std::string test_line(const std::string& id, const std::string& project, long bug,
                             const std::string& source = "assertNull(series);") {
  nlohmann::ordered_json j = {{"kind", "test"}, {"id", id},     {"project", project},
                              {"bug", bug},     {"name", id},   {"source", source}};
  return j.dump() + "\n";
}

inline std::string patch_line(const std::string& id, const std::string& project, long bug,
                              const std::string& label = "correct", const std::string& diff = "@@\n+x = 1;\n",
                              const std::string& origin = "developer") {
  nlohmann::ordered_json j = {{"kind", "patch"}, {"id", id},         {"project", project}, {"bug", bug},
                              {"origin", origin}, {"label", label}, {"diff", diff}};
  return j.dump() + "\n";
}

inline std::string link_line(const std::string& test_id, const std::string& patch_id) {
  nlohmann::ordered_json j = {{"kind", "link"}, {"test_id", test_id}, {"patch_id", patch_id}};
  return j.dump() + "\n";
}

inline std::string vec_line(const std::string& id, const std::vector<double>& v) {
  nlohmann::ordered_json j = {{"id", id}, {"vec", v}};
  return j.dump() + "\n";
}

inline EmbeddingVector ev(std::vector<double> v) { return EmbeddingVector{std::move(v)}; }

inline TestCase make_test(const std::string& id, const BugId& bug, const std::string& source = "assertTrue(x);") {
  return TestCase{id, bug, id, source};
}

inline Patch make_simple_patch(const std::string& id, const BugId& bug, Label label = Label::correct,
                               const std::string& diff = "@@\n+x = 1;\n") {
  Patch p;
  p.id = id;
  p.bug = bug;
  p.origin = "developer";
  p.label = label;
  p.diff = diff;
  p.hunks = parse_diff(diff);
  return p;
}

template <class F>
bool throws_kind(F&& f, ErrorKind kind) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

template <class F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace patchtriage::testing
