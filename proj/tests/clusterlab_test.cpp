// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "patchtriage/clusterlab.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace patchtriage;
using namespace patchtriage::testing;

namespace {

VectorStore store_of(const std::vector<std::vector<double>>& pts) {
  VectorStore s;
  for (std::size_t i = 0; i < pts.size(); ++i) s.insert("e" + std::to_string(i), ev(pts[i]));
  return s;
}

VectorStore blobs(std::mt19937_64& rng, const std::vector<std::vector<double>>& centers, std::size_t per, double spread) {
  std::normal_distribution<double> noise(0.0, spread);
  std::vector<std::vector<double>> pts;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per; ++i) {
      std::vector<double> p = c;
      for (double& x : p) x += noise(rng);
      pts.push_back(p);
    }
  }
  return store_of(pts);
}

Grouping grouping(std::vector<std::size_t> labels, std::size_t k) {
  Grouping g;
  g.k = k;
  for (std::size_t i = 0; i < labels.size(); ++i) g.ids.push_back("e" + std::to_string(i));
  g.labels = std::move(labels);
  return g;
}

// Textbook Pearson via sample covariance and standard deviations.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = (sxy - sx * sy / n) / (n - 1);
  const double vx = (sxx - sx * sx / n) / (n - 1);
  const double vy = (syy - sy * sy / n) / (n - 1);
  return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("k = 1 puts everything in one cluster", "[clusterlab]") {
  const VectorStore s = store_of({{0, 0}, {2, 0}, {1, 3}});
  const Clustering c = bisecting_kmeans(s, 1, 42);
  CHECK(c.k == 1);
  CHECK(c.labels == std::vector<std::size_t>{0, 0, 0});
  CHECK(c.centroids[0].values == std::vector<double>{1, 1});
}

TEST_CASE("two separated blobs split exactly", "[clusterlab]") {
  std::mt19937_64 rng(61);
  const VectorStore s = blobs(rng, {{0, 0}, {10, 10}}, 10, 0.5);
  const Clustering c = bisecting_kmeans(s, 2, 42);
  for (std::size_t i = 0; i < 20; ++i) CHECK(c.labels[i] == c.labels[i < 10 ? 0 : 10]);
  CHECK(c.labels[0] != c.labels[10]);
  CHECK(c.sizes() == std::vector<std::size_t>{10, 10});
}

TEST_CASE("k = n gives singletons with zero SSE", "[clusterlab]") {
  const VectorStore s = store_of({{0, 0}, {1, 0}, {5, 5}, {1, 1}, {9, 2}});
  const Clustering c = bisecting_kmeans(s, 5, 42);
  CHECK(std::set<std::size_t>(c.labels.begin(), c.labels.end()).size() == 5);
  CHECK(sse(c, s) == 0.0);
}

TEST_CASE("duplicate points can still be separated down to singletons", "[clusterlab]") {
  const VectorStore s = store_of({{1, 1}, {1, 1}, {1, 1}});
  const Clustering c = bisecting_kmeans(s, 3, 42);
  CHECK(c.sizes() == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("clustering rejects bad k", "[clusterlab]") {
  const VectorStore s = store_of({{0, 0}, {1, 0}});
  CHECK(throws_kind([&] { bisecting_kmeans(s, 3, 42); }, ErrorKind::too_few_points));
  CHECK(throws_kind([&] { bisecting_kmeans(s, 0, 42); }, ErrorKind::invalid_argument));
}

TEST_CASE("SSE is the squared distance to cluster means", "[clusterlab]") {
  const VectorStore s = store_of({{0, 0}, {2, 0}, {7, 7}});
  CHECK(sse(grouping({0, 0, 1}, 2), s) == 2.0);
  CHECK(sse(grouping({0, 1, 2}, 3), s) == 0.0);
}

TEST_CASE("bisection finds the optimal 2-partition on small separable inputs", "[clusterlab][property]") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int round = 0; round < 60; ++round) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      const double shift = (i % 2 == 0) ? 0.0 : 20.0;
      pts.push_back({u(rng) + shift, u(rng), u(rng)});
    }
    const VectorStore s = store_of(pts);
    const double best = oracle_best_two_partition_sse(s.vectors());
    CHECK(sse(bisecting_kmeans(s, 2, 42), s) == Catch::Approx(best).margin(1e-9));
  }
}

TEST_CASE("bisection never beats the optimum and SSE never grows along the path", "[clusterlab][property]") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal;
  for (int round = 0; round < 60; ++round) {
    const std::size_t n = 2 + rng() % 10;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({normal(rng), normal(rng)});
    const VectorStore s = store_of(pts);
    const auto path = bisecting_kmeans_path(s, n, rng());
    REQUIRE(path.size() == n);
    CHECK(sse(path[1], s) >= oracle_best_two_partition_sse(s.vectors()) - 1e-9);
    for (std::size_t k = 1; k < path.size(); ++k) {
      CHECK(path[k].k == k + 1);
      CHECK(sse(path[k], s) <= sse(path[k - 1], s) + 1e-9);
      for (const std::size_t size : path[k].sizes()) CHECK(size > 0);
    }
  }
}

TEST_CASE("clustering is deterministic for a fixed seed", "[clusterlab]") {
  std::mt19937_64 rng(73);
  const VectorStore s = blobs(rng, {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}, {0, 0, 3}}, 12, 1.0);
  const Clustering a = bisecting_kmeans(s, 6, 42);
  const Clustering b = bisecting_kmeans(s, 6, 42);
  CHECK(a.labels == b.labels);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("similarity coefficient arithmetic", "[clusterlab]") {
  CHECK(detail::sc_from(0.8, 0.4) == Catch::Approx(0.5));
  CHECK(detail::sc_from(0.2, 0.8) == Catch::Approx(-0.75));
  CHECK(detail::sc_from(0.5, 0.5) == 0.0);
}

TEST_CASE("similarity coefficient on a concrete grouping", "[clusterlab]") {
  // e0 and e1 one unit apart (sim 0.5); e2 three units from e0 (sim 0.25).
  const VectorStore s = store_of({{0, 0}, {1, 0}, {3, 0}});
  const Grouping g = grouping({0, 0, 1}, 2);
  CHECK(similarity_coefficient("e0", g, s) == Catch::Approx((0.5 - 0.25) / 0.5));
  // Singleton: in = 1.0, out = mean(1/4, 1/3).
  const double out = (0.25 + 1.0 / 3.0) / 2.0;
  CHECK(similarity_coefficient("e2", g, s) == Catch::Approx(1.0 - out));
  CHECK(throws_kind([&] { similarity_coefficient("e0", grouping({0, 0, 0}, 2), s); }, ErrorKind::degenerate_clustering));
}

TEST_CASE("cluster report statistics", "[clusterlab]") {
  SECTION("identical points in two clusters have zero CSC") {
    const VectorStore s = store_of({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    const ClusterReport r = cluster_report(grouping({0, 0, 1, 1}, 2), s);
    CHECK(r.csc == 0.0);
    CHECK(r.qualified == 0);
  }
  SECTION("well-separated blobs are all qualified") {
    std::mt19937_64 rng(79);
    const VectorStore s = blobs(rng, {{0, 0}, {20, 20}}, 5, 0.3);
    const ClusterReport r = cluster_report(bisecting_kmeans(s, 2, 42), s);
    CHECK(r.csc > 0.5);
    CHECK(r.qualified == 2);
    CHECK(r.nonempty_clusters == 2);
  }
  SECTION("a mixed-up grouping scores below zero") {
    const VectorStore s = store_of({{0, 0}, {0, 0.1}, {20, 0}, {20, 0.1}});
    const ClusterReport r = cluster_report(grouping({0, 1, 0, 1}, 2), s);
    CHECK(r.csc < 0.0);
    CHECK(r.qualified == 0);
  }
  SECTION("unused labels are reported as empty") {
    const VectorStore s = store_of({{0, 0}, {5, 0}});
    const ClusterReport r = cluster_report(grouping({0, 2}, 3), s);
    CHECK(r.nonempty_clusters == 2);
    CHECK_FALSE(r.cluster_sc[1].has_value());
  }
  CHECK(throws_kind([] { cluster_report(grouping({0}, 1), store_of({{0}})); }, ErrorKind::degenerate_clustering));
}

TEST_CASE("SC values stay within [-1, 1]", "[clusterlab][property]") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> normal;
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 3 + rng() % 15;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({normal(rng), normal(rng), normal(rng)});
    const VectorStore s = store_of(pts);
    const ClusterReport r = cluster_report(bisecting_kmeans(s, 2 + rng() % (n - 1), 42), s);
    for (const double x : r.sc) {
      CHECK(x >= -1.0);
      CHECK(x <= 1.0);
    }
    CHECK(r.csc >= -1.0);
    CHECK(r.csc <= 1.0);
  }
}

TEST_CASE("induced patch grouping follows the plurality of linked tests", "[clusterlab]") {
  const BugId a{"A", 1}, b{"A", 2};
  const std::vector<TestCase> tests = {make_test("t1", a), make_test("t2", a), make_test("t3", a),
                                       make_test("u1", b), make_test("u2", b)};
  const std::vector<Patch> patches = {make_simple_patch("PA", a), make_simple_patch("PB", b)};
  const Corpus c(tests, patches, {{"t1", "PA"}, {"t2", "PA"}, {"t3", "PA"}, {"u1", "PB"}, {"u2", "PB"}});
  Grouping g;
  g.k = 3;
  g.ids = {"t1", "t2", "t3", "u1", "u2"};
  g.labels = {0, 2, 2, 2, 1};
  const Grouping p = induced_patch_grouping(g, c);
  CHECK(p.ids == std::vector<std::string>{"PA", "PB"});
  CHECK(p.labels == std::vector<std::size_t>{2, 1});  // PB ties 1 vs 2 and takes 1

  Grouping unlinked = g;
  unlinked.ids[0] = "ghost";
  CHECK(throws_kind([&] { induced_patch_grouping(unlinked, c); }, ErrorKind::unlinked_test));
}

TEST_CASE("pearson correlation", "[clusterlab]") {
  CHECK(pearson({1, 2, 3}, {2, 4, 7}) == Catch::Approx(oracle_pearson({1, 2, 3}, {2, 4, 7})));
  CHECK(pearson({1, 2, 3}, {2, 4, 7}) == Catch::Approx(5.0 / std::sqrt(2.0 * 114.0 / 9.0)));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == Catch::Approx(-1.0));
  CHECK(throws_kind([] { pearson({1, 1, 1}, {1, 2, 3}); }, ErrorKind::zero_variance));
  CHECK(throws_kind([] { pearson({1, 2}, {1, 2, 3}); }, ErrorKind::invalid_argument));
  CHECK(throws_kind([] { pearson({1}, {1}); }, ErrorKind::invalid_argument));
}

TEST_CASE("pearson matches the textbook formula and is affine-invariant", "[clusterlab][property]") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> normal;
  for (int round = 0; round < 200; ++round) {
    std::vector<double> x, y;
    const std::size_t n = 2 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(normal(rng));
      y.push_back(normal(rng) + 0.5 * x.back());
    }
    const double r = pearson(x, y);
    CHECK(r == Catch::Approx(oracle_pearson(x, y)).margin(1e-9));
    CHECK(r == Catch::Approx(pearson(y, x)).margin(1e-12));
    std::vector<double> scaled = x;
    for (double& v : scaled) v = 3.0 * v - 2.0;
    CHECK(pearson(scaled, y) == Catch::Approx(r).margin(1e-9));
  }
}

TEST_CASE("scenario H vs N on a hand-built corpus", "[clusterlab]") {
  const BugId a1{"A", 1}, a2{"A", 2}, b1{"B", 1};
  const std::vector<TestCase> tests = {make_test("a1t", a1), make_test("a2t", a2), make_test("b1t", b1)};
  const std::vector<Patch> patches = {make_simple_patch("PA1", a1), make_simple_patch("PA2", a2),
                                      make_simple_patch("PB1", b1)};
  const Corpus c(tests, patches, {{"a1t", "PA1"}, {"a2t", "PA2"}, {"b1t", "PB1"}});
  VectorStore tv, pv;
  tv.insert("a1t", ev({0, 0}));
  tv.insert("a2t", ev({0, 1}));
  tv.insert("b1t", ev({0, 3}));
  pv.insert("PA1", ev({1, 0}));
  pv.insert("PA2", ev({1, 1}));
  pv.insert("PB1", ev({4, 4}));

  SECTION("all projects") {
    const ScenarioResult r = scenario_h_vs_n(c, tv, pv, Scope::all_projects, std::nullopt);
    REQUIRE(r.samples.size() == 3);
    // a1t: nearest test a2t -> PA2. N over {PA2, PB1}.
    CHECK(r.samples[0].best_test_similarity == 0.5);
    CHECK(*r.samples[0].h == 0.5);
    CHECK(r.samples[0].n == Catch::Approx((0.5 + 1.0 / 6.0) / 2.0));
    // b1t: nearest test a2t (distance 2).
    CHECK(r.samples[2].best_test_similarity == Catch::Approx(1.0 / 3.0));
    CHECK(*r.samples[2].h == Catch::Approx(1.0 / (1.0 + std::sqrt(18.0))));
    REQUIRE(r.projects.size() == 2);
    CHECK(r.projects[0].project == "A");
    CHECK(r.projects[0].h.size() == 2);
  }
  SECTION("threshold above every best similarity leaves H empty") {
    const ScenarioResult r = scenario_h_vs_n(c, tv, pv, Scope::all_projects, 0.99);
    for (const auto& s : r.samples) CHECK_FALSE(s.h.has_value());
    CHECK(r.projects[0].n.size() == 2);
  }
  SECTION("other projects only") {
    const ScenarioResult r = scenario_h_vs_n(c, tv, pv, Scope::other_projects_only, std::nullopt);
    REQUIRE(r.samples.size() == 3);
    CHECK(*r.samples[0].h == Catch::Approx(1.0 / (1.0 + 5.0)));  // PA1 vs PB1
    CHECK(r.samples[2].n == Catch::Approx((1.0 / 6.0 + 1.0 / (1.0 + std::sqrt(18.0))) / 2.0));
  }
}

TEST_CASE("scenario with identical patch vectors gives H = N = 1", "[clusterlab]") {
  const BugId a{"A", 1}, b{"A", 2};
  const Corpus c({make_test("x", a), make_test("y", b)}, {make_simple_patch("PX", a), make_simple_patch("PY", b)},
                 {{"x", "PX"}, {"y", "PY"}});
  VectorStore tv, pv;
  tv.insert("x", ev({0, 0}));
  tv.insert("y", ev({1, 0}));
  pv.insert("PX", ev({2, 2}));
  pv.insert("PY", ev({2, 2}));
  const ScenarioResult r = scenario_h_vs_n(c, tv, pv, Scope::all_projects, std::nullopt);
  for (const auto& s : r.samples) {
    CHECK(*s.h == 1.0);
    CHECK(s.n == 1.0);
  }
  CHECK(throws_kind([&] { scenario_h_vs_n(c, tv, pv, Scope::other_projects_only, std::nullopt); }, ErrorKind::empty_scope));
}

TEST_CASE("median", "[clusterlab]") {
  CHECK(*median({3, 1, 2}) == 2.0);
  CHECK(*median({4, 1, 2, 3}) == 2.5);
  CHECK_FALSE(median({}).has_value());
}
