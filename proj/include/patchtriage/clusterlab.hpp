// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"
#include "patchtriage/error.hpp"
#include "patchtriage/simindex.hpp"

namespace patchtriage {

/// Entity ids with a cluster label in [0, k). Some labels may be unused
/// (induced patch groupings can leave a test cluster without patches).
struct Grouping {
  std::size_t k = 0;
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;

  std::size_t label_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return labels[i];
    }
    throw Error(ErrorKind::invalid_argument, "'" + id + "' is not in the grouping");
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (const std::size_t l : labels) ++out[l];
    return out;
  }
};

/// A partition with every cluster nonempty and its mean as centroid.
struct Clustering : Grouping {
  std::vector<EmbeddingVector> centroids;
};

namespace detail {

using Points = std::vector<const EmbeddingVector*>;

inline double squared_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a.values[i] - b.values[i];
    d2 += diff * diff;
  }
  return d2;
}

inline EmbeddingVector mean_of_members(const Points& points, const std::vector<std::size_t>& members) {
  EmbeddingVector mean;
  mean.values.assign(points.front()->dim(), 0.0);
  for (const std::size_t m : members) {
    for (std::size_t i = 0; i < mean.dim(); ++i) mean.values[i] += points[m]->values[i];
  }
  for (double& x : mean.values) x /= static_cast<double>(members.size());
  return mean;
}

inline double scatter(const Points& points, const std::vector<std::size_t>& members) {
  if (members.empty()) return 0.0;
  const EmbeddingVector mean = mean_of_members(points, members);
  double total = 0.0;
  for (const std::size_t m : members) total += squared_distance(*points[m], mean);
  return total;
}

// Bit-exact across standard libraries, unlike std::uniform_*_distribution.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Split {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  double sse = std::numeric_limits<double>::infinity();
};

inline Split two_means_once(const Points& points, const std::vector<std::size_t>& members, std::mt19937_64& rng) {
  // k-means++ seeding.
  const std::size_t first_pick = members[rng() % members.size()];
  std::vector<double> weights(members.size());
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    weights[i] = squared_distance(*points[members[i]], *points[first_pick]);
    total += weights[i];
  }
  std::size_t second_pick = members.back();
  if (total > 0.0) {
    const double target = unit_double(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (weights[i] == 0.0) continue;
      acc += weights[i];
      second_pick = members[i];
      if (acc > target) break;
    }
  }
  std::array<EmbeddingVector, 2> centers = {*points[first_pick], *points[second_pick]};

  Split split;
  constexpr int kMaxIterations = 100;
  constexpr double kShiftTolerance = 1e-9;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    split.first.clear();
    split.second.clear();
    for (const std::size_t m : members) {
      const double d0 = squared_distance(*points[m], centers[0]);
      const double d1 = squared_distance(*points[m], centers[1]);
      (d1 < d0 ? split.second : split.first).push_back(m);
    }
    // Reseed an empty side with the point farthest from the other center.
    for (int side = 0; side < 2; ++side) {
      auto& empty = side == 0 ? split.first : split.second;
      auto& full = side == 0 ? split.second : split.first;
      if (!empty.empty()) continue;
      const EmbeddingVector& other = centers[1 - side];
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < full.size(); ++i) {
        const double d = squared_distance(*points[full[i]], other);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      empty.push_back(full[far]);
      full.erase(full.begin() + static_cast<std::ptrdiff_t>(far));
    }
    std::array<EmbeddingVector, 2> next = {mean_of_members(points, split.first),
                                           mean_of_members(points, split.second)};
    const double shift = std::max(std::sqrt(squared_distance(next[0], centers[0])),
                                  std::sqrt(squared_distance(next[1], centers[1])));
    centers = std::move(next);
    if (shift < kShiftTolerance) break;
  }
  split.sse = scatter(points, split.first) + scatter(points, split.second);
  return split;
}

inline std::mt19937_64 split_rng(std::uint64_t seed, std::size_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  return std::mt19937_64(seq);
}

inline Clustering make_clustering(const VectorStore& vecs, const Points& points,
                                  const std::vector<std::vector<std::size_t>>& clusters) {
  Clustering c;
  c.k = clusters.size();
  c.ids = vecs.ids();
  c.labels.assign(points.size(), 0);
  for (std::size_t label = 0; label < clusters.size(); ++label) {
    for (const std::size_t m : clusters[label]) c.labels[m] = label;
    c.centroids.push_back(mean_of_members(points, clusters[label]));
  }
  return c;
}

}  // namespace detail

/// Runs the bisection up to `k_max` clusters and returns the clustering at
/// every intermediate k (index 0 holds k = 1).
///
/// Each step splits the cluster with the largest SSE (ties: lowest label)
/// using 2-means with k-means++ seeding. Step i draws from one PRNG seeded by
/// (seed, i); five restarts are tried and the lowest post-split SSE wins.
/// The first half keeps the parent's label, the second half takes label k.
inline std::vector<Clustering> bisecting_kmeans_path(const VectorStore& vecs, std::size_t k_max, std::uint64_t seed) {
  if (k_max == 0) throw Error(ErrorKind::invalid_argument, "k must be positive");
  if (vecs.size() < k_max) {
    throw Error(ErrorKind::too_few_points,
                std::to_string(vecs.size()) + " points cannot form " + std::to_string(k_max) + " clusters");
  }
  detail::Points points;
  points.reserve(vecs.size());
  for (const EmbeddingVector& v : vecs.vectors()) points.push_back(&v);

  std::vector<std::vector<std::size_t>> clusters(1);
  for (std::size_t i = 0; i < points.size(); ++i) clusters[0].push_back(i);
  std::vector<double> sse = {detail::scatter(points, clusters[0])};

  std::vector<Clustering> path;
  path.push_back(detail::make_clustering(vecs, points, clusters));

  constexpr int kRestarts = 5;
  for (std::size_t iteration = 1; iteration < k_max; ++iteration) {
    std::size_t target = clusters.size();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].size() < 2) continue;
      if (target == clusters.size() || sse[c] > sse[target]) target = c;
    }
    detail::Split best;
    if (sse[target] == 0.0) {
      // Identical points: any split is optimal, peel off the last one.
      best.first = clusters[target];
      best.second = {best.first.back()};
      best.first.pop_back();
      best.sse = 0.0;
    } else {
      std::mt19937_64 rng = detail::split_rng(seed, iteration);
      for (int r = 0; r < kRestarts; ++r) {
        detail::Split s = detail::two_means_once(points, clusters[target], rng);
        if (s.sse < best.sse) best = std::move(s);
      }
    }
    sse[target] = detail::scatter(points, best.first);
    sse.push_back(detail::scatter(points, best.second));
    clusters[target] = std::move(best.first);
    clusters.push_back(std::move(best.second));
    path.push_back(detail::make_clustering(vecs, points, clusters));
  }
  return path;
}

inline Clustering bisecting_kmeans(const VectorStore& vecs, std::size_t k, std::uint64_t seed) {
  return std::move(bisecting_kmeans_path(vecs, k, seed).back());
}

/// Sum over clusters of squared distances to the cluster mean.
inline double sse(const Grouping& g, const VectorStore& vecs) {
  std::vector<std::vector<std::size_t>> members(g.k);
  detail::Points points;
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    members[g.labels[i]].push_back(i);
    points.push_back(&vecs.at(g.ids[i]));
  }
  double total = 0.0;
  for (const auto& m : members) total += detail::scatter(points, m);
  return total;
}

namespace detail {

/// in(e) and out(e) for SC; in is 1.0 for a singleton cluster.
inline std::pair<double, double> in_out(std::size_t e, const Grouping& g, const std::vector<std::vector<double>>& sims) {
  double in_sum = 0.0;
  double out_sum = 0.0;
  std::size_t in_n = 0;
  std::size_t out_n = 0;
  for (std::size_t j = 0; j < g.ids.size(); ++j) {
    if (j == e) continue;
    if (g.labels[j] == g.labels[e]) {
      in_sum += sims[e][j];
      ++in_n;
    } else {
      out_sum += sims[e][j];
      ++out_n;
    }
  }
  if (out_n == 0) throw Error(ErrorKind::degenerate_clustering, "no entity outside the cluster of '" + g.ids[e] + "'");
  const double in = in_n == 0 ? 1.0 : in_sum / static_cast<double>(in_n);
  return {in, out_sum / static_cast<double>(out_n)};
}

inline double sc_from(double in, double out) { return (in - out) / std::max(in, out); }

inline std::vector<std::vector<double>> similarity_matrix(const Grouping& g, const VectorStore& vecs) {
  const std::size_t n = g.ids.size();
  std::vector<const EmbeddingVector*> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = &vecs.at(g.ids[i]);
  std::vector<std::vector<double>> sims(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sims[i][j] = sims[j][i] = euclidean_sim(*v[i], *v[j]);
  }
  return sims;
}

}  // namespace detail

/// (in - out) / max(in, out) over euclidean similarities.
inline double similarity_coefficient(const std::string& id, const Grouping& g, const VectorStore& vecs) {
  std::size_t e = g.ids.size();
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    if (g.ids[i] == id) e = i;
  }
  if (e == g.ids.size()) throw Error(ErrorKind::invalid_argument, "'" + id + "' is not in the grouping");
  const EmbeddingVector& x = vecs.at(id);
  double in_sum = 0.0;
  double out_sum = 0.0;
  std::size_t in_n = 0;
  std::size_t out_n = 0;
  for (std::size_t j = 0; j < g.ids.size(); ++j) {
    if (j == e) continue;
    const double s = euclidean_sim(x, vecs.at(g.ids[j]));
    if (g.labels[j] == g.labels[e]) {
      in_sum += s;
      ++in_n;
    } else {
      out_sum += s;
      ++out_n;
    }
  }
  if (out_n == 0) throw Error(ErrorKind::degenerate_clustering, "no entity outside the cluster of '" + id + "'");
  const double in = in_n == 0 ? 1.0 : in_sum / static_cast<double>(in_n);
  return detail::sc_from(in, out_sum / static_cast<double>(out_n));
}

struct ClusterReport {
  double sse = 0.0;
  std::vector<double> sc;                      // parallel to the grouping's ids
  std::vector<std::optional<double>> cluster_sc;  // member-mean SC; empty for unused labels
  double csc = 0.0;
  std::size_t qualified = 0;        // clusters with member-mean SC > 0
  std::size_t nonempty_clusters = 0;
};

inline ClusterReport cluster_report(const Grouping& g, const VectorStore& vecs) {
  if (g.k < 2) throw Error(ErrorKind::degenerate_clustering, "cluster report needs k >= 2");
  const auto sims = detail::similarity_matrix(g, vecs);
  ClusterReport r;
  r.sse = sse(g, vecs);
  r.sc.resize(g.ids.size());
  std::vector<double> sum(g.k, 0.0);
  std::vector<std::size_t> count(g.k, 0);
  double total = 0.0;
  for (std::size_t e = 0; e < g.ids.size(); ++e) {
    const auto [in, out] = detail::in_out(e, g, sims);
    r.sc[e] = detail::sc_from(in, out);
    total += r.sc[e];
    sum[g.labels[e]] += r.sc[e];
    ++count[g.labels[e]];
  }
  r.csc = total / static_cast<double>(g.ids.size());
  r.cluster_sc.resize(g.k);
  for (std::size_t c = 0; c < g.k; ++c) {
    if (count[c] == 0) continue;
    ++r.nonempty_clusters;
    r.cluster_sc[c] = sum[c] / static_cast<double>(count[c]);
    if (*r.cluster_sc[c] > 0.0) ++r.qualified;
  }
  return r;
}

/// Assigns every linked patch to the test cluster holding the plurality of
/// its tests (ties: lowest label). Patch order is first appearance.
inline Grouping induced_patch_grouping(const Grouping& tests, const Corpus& corpus) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> votes;
  for (std::size_t i = 0; i < tests.ids.size(); ++i) {
    const Patch* p = corpus.linked_patch(tests.ids[i]);
    if (p == nullptr) throw Error(ErrorKind::unlinked_test, "test '" + tests.ids[i] + "' has no linked patch");
    auto [it, inserted] = votes.try_emplace(p->id, std::vector<std::size_t>(tests.k, 0));
    if (inserted) order.push_back(p->id);
    ++it->second[tests.labels[i]];
  }
  Grouping g;
  g.k = tests.k;
  for (const std::string& id : order) {
    const auto& v = votes.at(id);
    g.ids.push_back(id);
    g.labels.push_back(static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()));
  }
  return g;
}

/// Sample Pearson correlation.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "pearson needs two equal-length series of at least 2 values");
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::zero_variance, "constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// One linked failing test's Scenario H / Scenario N measurement.
struct ScenarioSample {
  std::string test_id;
  std::string project;
  double best_test_similarity = 0.0;  // to the most similar historical test
  std::optional<double> h;           // absent when below the test threshold
  double n = 0.0;
};

struct ProjectScenario {
  std::string project;
  std::vector<double> h;
  std::vector<double> n;
};

struct ScenarioResult {
  std::vector<ScenarioSample> samples;
  std::vector<ProjectScenario> projects;  // first-appearance order
};

/// For each linked test: H compares its developer patch with the patch of
/// the most similar historical test (ties: ascending test id); N averages
/// the developer patch's similarity to every distinct patch in scope. Tests
/// whose scope is empty are skipped; EmptyScope if that leaves nothing.
inline ScenarioResult scenario_h_vs_n(const Corpus& corpus, const VectorStore& test_vecs, const VectorStore& patch_vecs,
                                      Scope scope, std::optional<double> t_test) {
  ScenarioResult result;
  std::map<BugId, SearchSpace> spaces;
  std::unordered_map<std::string, std::size_t> project_index;
  for (const Link& link : corpus.links()) {
    const TestCase& test = *corpus.find_test(link.test_id);
    const Patch& patch = *corpus.find_patch(link.patch_id);
    auto it = spaces.find(test.bug);
    if (it == spaces.end()) it = spaces.emplace(test.bug, make_search_space(corpus, test.bug, scope)).first;
    const SearchSpace& space = it->second;
    if (space.entries.empty()) continue;

    const EmbeddingVector& tv = test_vecs.at(test.id);
    const SearchEntry* best = nullptr;
    double best_sim = -1.0;
    for (const SearchEntry& e : space.entries) {
      const double s = euclidean_sim(tv, test_vecs.at(e.test.id));
      if (s > best_sim || (s == best_sim && e.test.id < best->test.id)) {
        best_sim = s;
        best = &e;
      }
    }
    const EmbeddingVector& pv = patch_vecs.at(patch.id);
    ScenarioSample sample;
    sample.test_id = test.id;
    sample.project = test.bug.project;
    sample.best_test_similarity = best_sim;
    if (!t_test || best_sim > *t_test) sample.h = euclidean_sim(pv, patch_vecs.at(best->patch.id));
    std::unordered_set<std::string> seen;
    double total = 0.0;
    for (const SearchEntry& e : space.entries) {
      if (!seen.insert(e.patch.id).second) continue;
      total += euclidean_sim(pv, patch_vecs.at(e.patch.id));
    }
    sample.n = total / static_cast<double>(seen.size());

    auto [pi, inserted] = project_index.try_emplace(sample.project, result.projects.size());
    if (inserted) result.projects.push_back(ProjectScenario{sample.project, {}, {}});
    ProjectScenario& ps = result.projects[pi->second];
    if (sample.h) ps.h.push_back(*sample.h);
    ps.n.push_back(sample.n);
    result.samples.push_back(std::move(sample));
  }
  if (result.samples.empty()) throw Error(ErrorKind::empty_scope, "no linked test has a nonempty search scope");
  return result;
}

/// Median of a nonempty list (mean of the middle pair for even sizes).
inline std::optional<double> median(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2.0;
}

}  // namespace patchtriage
