// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"
#include "patchtriage/error.hpp"

namespace patchtriage {

enum class SimilarityMeasure { cosine, euclidean_sim, levenshtein_sim };

inline std::string_view to_string(SimilarityMeasure m) noexcept {
  switch (m) {
    case SimilarityMeasure::cosine: return "cosine";
    case SimilarityMeasure::euclidean_sim: return "euclidean";
    case SimilarityMeasure::levenshtein_sim: return "levenshtein";
  }
  return "cosine";
}

inline std::optional<SimilarityMeasure> parse_measure(std::string_view s) noexcept {
  if (s == "cosine") return SimilarityMeasure::cosine;
  if (s == "euclidean" || s == "euclidean_sim") return SimilarityMeasure::euclidean_sim;
  if (s == "levenshtein" || s == "levenshtein_sim") return SimilarityMeasure::levenshtein_sim;
  return std::nullopt;
}

/// A historical test retained by retrieval, with the correct patch it maps to.
struct Neighbor {
  std::string test_id;
  std::string patch_id;
  double similarity = 0.0;
};

namespace detail {

inline void require_same_dim(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::dimension_mismatch, std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
}

}  // namespace detail

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  detail::require_same_dim(a, b);
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::zero_vector, "cosine of an all-zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// 1 / (1 + ||a - b||). Vectors need not be normalized; patch vectors are
/// sums of unit hunk vectors, so their distances scale with hunk count.
inline double euclidean_sim(const EmbeddingVector& a, const EmbeddingVector& b) {
  detail::require_same_dim(a, b);
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a.values[i] - b.values[i];
    d2 += diff * diff;
  }
  return 1.0 / (1.0 + std::sqrt(d2));
}

/// Unit-cost edit distance over bytes.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

inline double levenshtein_sim(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

/// Vector similarity dispatch; levenshtein is string-only and rejected here.
inline double similarity(SimilarityMeasure m, const EmbeddingVector& a, const EmbeddingVector& b) {
  switch (m) {
    case SimilarityMeasure::cosine: return cosine(a, b);
    case SimilarityMeasure::euclidean_sim: return euclidean_sim(a, b);
    case SimilarityMeasure::levenshtein_sim: break;
  }
  throw Error(ErrorKind::invalid_argument, "levenshtein similarity applies to strings, not vectors");
}

/// Scores every search-space entry by its best euclidean_sim against any of
/// the failing tests, keeps scores strictly above `t_test`, and returns the
/// top `k` (descending score, ascending test id on ties).
inline std::vector<Neighbor> retrieve_similar_tests(const std::vector<TestCase>& failing, const SearchSpace& space,
                                                    const VectorStore& test_vecs, std::size_t k, double t_test) {
  if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be positive");
  std::vector<const EmbeddingVector*> queries;
  queries.reserve(failing.size());
  for (const TestCase& t : failing) queries.push_back(&test_vecs.at(t.id));

  std::vector<Neighbor> scored;
  if (queries.empty()) return scored;
  for (const SearchEntry& entry : space.entries) {
    const EmbeddingVector& candidate = test_vecs.at(entry.test.id);
    double best = -1.0;
    for (const EmbeddingVector* q : queries) best = std::max(best, euclidean_sim(*q, candidate));
    if (best > t_test) scored.push_back(Neighbor{entry.test.id, entry.patch.id, best});
  }
  std::sort(scored.begin(), scored.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.test_id < b.test_id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

/// Componentwise mean of the given vectors' distinct ids, in first-seen order.
inline EmbeddingVector mean_of(const std::vector<std::string>& ids, const VectorStore& vecs) {
  std::vector<std::string> distinct;
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (seen.insert(id).second) distinct.push_back(id);
  }
  EmbeddingVector mean;
  for (const std::string& id : distinct) {
    const EmbeddingVector& v = vecs.at(id);
    if (mean.values.empty()) mean.values.assign(v.dim(), 0.0);
    detail::require_same_dim(mean, v);
    for (std::size_t i = 0; i < v.dim(); ++i) mean.values[i] += v.values[i];
  }
  const auto n = static_cast<double>(distinct.size());
  for (double& x : mean.values) x /= n;
  return mean;
}

/// Mean vector of the distinct correct patches reached by `neighbors`.
inline EmbeddingVector patch_centroid(const std::vector<Neighbor>& neighbors, const VectorStore& patch_vecs) {
  if (neighbors.empty()) throw Error(ErrorKind::empty_neighbor_set, "no neighbors to average");
  std::vector<std::string> ids;
  ids.reserve(neighbors.size());
  for (const Neighbor& n : neighbors) ids.push_back(n.patch_id);
  return mean_of(ids, patch_vecs);
}

}  // namespace patchtriage
