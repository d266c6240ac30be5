// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"
#include "patchtriage/error.hpp"
#include "patchtriage/simindex.hpp"

namespace patchtriage {

/// `error` never comes out of the predictors themselves; batch drivers use it
/// to record a candidate whose prediction threw.
enum class Verdict { correct, incorrect, abstain, error };

enum class PredictionSource { bats, baseline_history, baseline_levenshtein, external };

inline std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::correct: return "correct";
    case Verdict::incorrect: return "incorrect";
    case Verdict::abstain: return "abstain";
    case Verdict::error: return "error";
  }
  return "error";
}

inline std::string_view to_string(PredictionSource s) noexcept {
  switch (s) {
    case PredictionSource::bats: return "bats";
    case PredictionSource::baseline_history: return "baseline_history";
    case PredictionSource::baseline_levenshtein: return "baseline_levenshtein";
    case PredictionSource::external: return "external";
  }
  return "bats";
}

struct PredictionRecord {
  std::string patch_id;
  double score = 0.0;  // NaN when abstaining
  Verdict verdict = Verdict::abstain;
  std::vector<Neighbor> evidence;
  PredictionSource source = PredictionSource::bats;
  std::string message;  // diagnostics for Verdict::error

  bool decided() const noexcept { return verdict == Verdict::correct || verdict == Verdict::incorrect; }
};

struct Thresholds {
  double t_test = 0.8;
  double t_patch = 0.5;
  std::size_t k = 5;
};

namespace detail {

inline PredictionRecord abstain_record(const Patch& candidate, PredictionSource source) {
  PredictionRecord r;
  r.patch_id = candidate.id;
  r.score = std::nan("");
  r.verdict = Verdict::abstain;
  r.source = source;
  return r;
}

/// Cosine lives in [-1, 1]; map it onto [0, 1] so one threshold fits all.
inline double decision_score(SimilarityMeasure m, const EmbeddingVector& a, const EmbeddingVector& b) {
  const double s = similarity(m, a, b);
  return m == SimilarityMeasure::cosine ? (s + 1.0) / 2.0 : s;
}

inline Verdict threshold(double score, double t_patch) noexcept {
  return score > t_patch ? Verdict::correct : Verdict::incorrect;
}

inline void require_vector_measure(SimilarityMeasure m) {
  if (m == SimilarityMeasure::levenshtein_sim) {
    throw Error(ErrorKind::invalid_argument, "patch comparison needs cosine or euclidean similarity");
  }
}

}  // namespace detail

/// Retrieves historical tests similar to the bug's failing tests, averages
/// their correct patches and thresholds the candidate's similarity to that
/// centroid. Abstains when retrieval finds nothing.
inline PredictionRecord predict_bats(const Patch& candidate, const std::vector<TestCase>& failing,
                                     const SearchSpace& space, const VectorStore& test_vecs,
                                     const VectorStore& patch_vecs, const Thresholds& th, SimilarityMeasure measure) {
  detail::require_vector_measure(measure);
  std::vector<Neighbor> neighbors = retrieve_similar_tests(failing, space, test_vecs, th.k, th.t_test);
  if (neighbors.empty()) return detail::abstain_record(candidate, PredictionSource::bats);
  const EmbeddingVector centroid = patch_centroid(neighbors, patch_vecs);
  PredictionRecord r;
  r.patch_id = candidate.id;
  r.score = detail::decision_score(measure, patch_vecs.at(candidate.id), centroid);
  r.verdict = detail::threshold(r.score, th.t_patch);
  r.evidence = std::move(neighbors);
  r.source = PredictionSource::bats;
  return r;
}

/// Test-agnostic baseline: similarity to the mean of every correct patch in
/// the search space.
inline PredictionRecord predict_baseline_history(const Patch& candidate, const SearchSpace& space,
                                                 const VectorStore& patch_vecs, const Thresholds& th,
                                                 SimilarityMeasure measure) {
  detail::require_vector_measure(measure);
  if (space.entries.empty()) throw Error(ErrorKind::empty_search_space, "no historical patches");
  std::vector<std::string> ids;
  ids.reserve(space.entries.size());
  for (const SearchEntry& e : space.entries) ids.push_back(e.patch.id);
  const EmbeddingVector mean = mean_of(ids, patch_vecs);
  PredictionRecord r;
  r.patch_id = candidate.id;
  r.score = detail::decision_score(measure, patch_vecs.at(candidate.id), mean);
  r.verdict = detail::threshold(r.score, th.t_patch);
  r.source = PredictionSource::baseline_history;
  return r;
}

/// Raw-string ablation: mean Levenshtein similarity between the candidate's
/// diff text and the diff text of each distinct neighbor patch.
inline PredictionRecord predict_baseline_levenshtein(const Patch& candidate, const std::vector<Neighbor>& neighbors,
                                                     const Corpus& corpus, const Thresholds& th) {
  if (neighbors.empty()) return detail::abstain_record(candidate, PredictionSource::baseline_levenshtein);
  std::unordered_set<std::string> seen;
  double total = 0.0;
  std::size_t count = 0;
  for (const Neighbor& n : neighbors) {
    if (!seen.insert(n.patch_id).second) continue;
    const Patch* p = corpus.find_patch(n.patch_id);
    if (p == nullptr) throw Error(ErrorKind::validation, "neighbor patch '" + n.patch_id + "' not in corpus");
    total += levenshtein_sim(candidate.diff, p->diff);
    ++count;
  }
  PredictionRecord r;
  r.patch_id = candidate.id;
  r.score = total / static_cast<double>(count);
  r.verdict = detail::threshold(r.score, th.t_patch);
  r.evidence = neighbors;
  r.source = PredictionSource::baseline_levenshtein;
  return r;
}

/// Scored records by descending score (ties: ascending patch id), then
/// undecided records in input order.
inline std::vector<PredictionRecord> rank_candidates(std::vector<PredictionRecord> records) {
  const auto mid = std::stable_partition(records.begin(), records.end(),
                                         [](const PredictionRecord& r) { return r.decided(); });
  std::sort(records.begin(), mid, [](const PredictionRecord& a, const PredictionRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.patch_id < b.patch_id;
  });
  return records;
}

struct ExternalPrediction {
  Verdict verdict = Verdict::incorrect;
  std::optional<double> score;
};

using ExternalPredictions = std::unordered_map<std::string, ExternalPrediction>;

/// {"patch_id":..., "verdict":"correct"|"incorrect", "score":optional float}
inline ExternalPredictions read_external_predictions(std::istream& in) {
  ExternalPredictions out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_line(line)) continue;
    const nlohmann::json j = detail::parse_json_line(line, line_no);
    const std::string id = detail::require_string(j, "patch_id", line_no);
    const std::string verdict = detail::require_string(j, "verdict", line_no);
    ExternalPrediction p;
    if (verdict == "correct") {
      p.verdict = Verdict::correct;
    } else if (verdict == "incorrect") {
      p.verdict = Verdict::incorrect;
    } else {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": unknown verdict '" + verdict + "'");
    }
    if (const auto s = j.find("score"); s != j.end() && !s->is_null()) {
      if (!s->is_number() || !std::isfinite(s->get<double>())) {
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": score must be a finite number");
      }
      p.score = s->get<double>();
    }
    if (!out.emplace(id, p).second) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": duplicate patch_id '" + id + "'");
    }
  }
  return out;
}

inline ExternalPredictions load_external_predictions(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_external_predictions(in);
}

/// Keeps every decided record; replaces each abstention with the external
/// verdict. External records without a score get 1.0 (correct) or 0.0.
inline std::vector<PredictionRecord> combine_with_external(const std::vector<PredictionRecord>& bats,
                                                           const ExternalPredictions& external) {
  std::vector<PredictionRecord> out;
  out.reserve(bats.size());
  for (const PredictionRecord& r : bats) {
    if (r.verdict != Verdict::abstain) {
      out.push_back(r);
      continue;
    }
    const auto it = external.find(r.patch_id);
    if (it == external.end()) {
      throw Error(ErrorKind::missing_external_prediction, "no external prediction for '" + r.patch_id + "'");
    }
    PredictionRecord x;
    x.patch_id = r.patch_id;
    x.verdict = it->second.verdict;
    x.score = it->second.score.value_or(it->second.verdict == Verdict::correct ? 1.0 : 0.0);
    x.source = PredictionSource::external;
    out.push_back(std::move(x));
  }
  return out;
}

inline std::vector<PredictionRecord> combine_with_external(const std::vector<PredictionRecord>& bats,
                                                           const std::string& external_path) {
  return combine_with_external(bats, load_external_predictions(external_path));
}

inline nlohmann::ordered_json to_json(const PredictionRecord& r) {
  nlohmann::ordered_json j;
  j["patch_id"] = r.patch_id;
  if (std::isfinite(r.score) && r.verdict != Verdict::abstain && r.verdict != Verdict::error) {
    j["score"] = r.score;
  } else {
    j["score"] = nullptr;
  }
  j["verdict"] = std::string(to_string(r.verdict));
  j["source"] = std::string(to_string(r.source));
  nlohmann::ordered_json evidence = nlohmann::ordered_json::array();
  for (const Neighbor& n : r.evidence) {
    evidence.push_back({{"test_id", n.test_id}, {"patch_id", n.patch_id}, {"similarity", n.similarity}});
  }
  j["evidence"] = std::move(evidence);
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace patchtriage
