// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "patchtriage/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/null_check_fixture.hpp"
#include "support/synthetic_corpus.hpp"
#include "support/temp_files.hpp"

using namespace patchtriage;
using namespace patchtriage::testing;

namespace {

RunConfig external_config(const NullCheckFixture& f) {
  RunConfig c;
  c.corpus_path = f.corpus;
  c.candidates_path = f.candidates;
  c.embedder = Embedder::external;
  c.test_vecs_path = f.test_vecs;
  c.patch_vecs_path = f.patch_vecs;
  return c;
}

const PredictionRecord& by_id(const std::vector<PredictionRecord>& rs, const std::string& id) {
  for (const auto& r : rs) {
    if (r.patch_id == id) return r;
  }
  FAIL("no record for " << id);
  return rs.front();
}

}  // namespace

TEST_CASE("null-check candidate passes and deletion candidate fails", "[pipeline]") {
  const NullCheckFixture f = write_null_check_fixture("pipe_nc_");
  const RunConfig config = external_config(f);
  const Workspace ws = load_workspace(config, true);
  const auto records = predict_candidates(ws.corpus, ws.candidates, ws.stores, PredictOptions::from(config));
  REQUIRE(records.size() == 2);
  CHECK(records[0].verdict == Verdict::correct);
  CHECK(records[0].score == Catch::Approx(kSoFixScore).margin(1e-6));
  CHECK(records[1].verdict == Verdict::incorrect);
  CHECK(records[1].score == Catch::Approx(kKaliAScore).margin(1e-6));
  REQUIRE(records[0].evidence.size() == 2);
  CHECK(records[0].evidence[0].test_id == "c4t");
  CHECK(records[0].evidence[1].test_id == "c25t");
}

TEST_CASE("a very strict t_test makes every candidate abstain", "[pipeline]") {
  const NullCheckFixture f = write_null_check_fixture("pipe_strict_");
  RunConfig config = external_config(f);
  config.thresholds.t_test = 0.99;
  const Workspace ws = load_workspace(config, true);
  const auto records = predict_candidates(ws.corpus, ws.candidates, ws.stores, PredictOptions::from(config));
  const VerdictCounts c = count_verdicts(records);
  CHECK(c.abstain == 2);
  std::ostringstream out;
  write_prediction_report(out, rank_by_bug(ws.candidates, records));
  CHECK(out.str().find("\"rank\":null") != std::string::npos);
}

TEST_CASE("a missing candidate vector yields an error verdict without stopping the batch", "[pipeline]") {
  const NullCheckFixture f = write_null_check_fixture("pipe_missing_");
  RunConfig config = external_config(f);
  config.patch_vecs_path = write_temp("pipe_missing_pv.jsonl", read_file(f.patch_vecs).substr(0, read_file(f.patch_vecs).rfind("{\"id\":\"Chart-26-KaliA\"")));
  const Workspace ws = load_workspace(config, true);
  const auto records = predict_candidates(ws.corpus, ws.candidates, ws.stores, PredictOptions::from(config));
  CHECK(records[0].verdict == Verdict::correct);
  CHECK(records[1].verdict == Verdict::error);
  CHECK(records[1].message.find("Chart-26-KaliA") != std::string::npos);
}

TEST_CASE("run configuration is validated", "[pipeline]") {
  RunConfig c;
  c.corpus_path = "x";
  CHECK_NOTHROW(c.validate());
  c.embedder = Embedder::external;
  CHECK(throws_kind([&] { c.validate(); }, ErrorKind::config));
  c.embedder = Embedder::builtin;
  c.test_vecs_path = "v.jsonl";
  CHECK(throws_kind([&] { c.validate(); }, ErrorKind::config));
  c.test_vecs_path.reset();
  c.thresholds.t_patch = 1.5;
  CHECK(throws_kind([&] { c.validate(); }, ErrorKind::config));
  c.thresholds.t_patch = 0.5;
  c.thresholds.k = 0;
  CHECK(throws_kind([&] { c.validate(); }, ErrorKind::config));
  c.thresholds.k = 5;
  c.method = Method::history;
  c.measure = SimilarityMeasure::levenshtein_sim;
  CHECK(throws_kind([&] { c.validate(); }, ErrorKind::config));
}

TEST_CASE("a candidate reusing a corpus id must carry the same diff", "[pipeline]") {
  const BugId bug{"A", 1};
  const Corpus corpus({make_test("t", bug)}, {make_simple_patch("P", bug)}, {{"t", "P"}});
  CHECK_NOTHROW(build_builtin_stores(corpus, {make_simple_patch("P", bug)}, EmbeddingProvider{}));
  CHECK(throws_kind([&] { build_builtin_stores(corpus, {make_simple_patch("P", bug, Label::correct, "@@\n-y;\n")}, EmbeddingProvider{}); },
                    ErrorKind::validation));
}

TEST_CASE("evaluation sweep on the synthetic corpus", "[pipeline]") {
  const SyntheticCorpus s = make_synthetic_corpus();
  const Stores stores = build_builtin_stores(s.corpus, s.candidates, EmbeddingProvider{});
  const auto rows = eval_sweep(s.corpus, s.candidates, stores, PredictOptions{}, {0.0, 0.8, 0.999});
  REQUIRE(rows.size() == 3);
  // At t_test 0 every euclidean similarity clears the bar: all candidates assessed.
  CHECK(rows[0].report.n_assessed == s.candidates.size());
  CHECK(rows[1].report.n_assessed <= rows[0].report.n_assessed);
  CHECK(rows[2].report.n_assessed == 0);

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string header, first, second, last;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  std::getline(lines, last);
  CHECK(header == "t_test,n_correct,n_incorrect,auc,f1,pos_recall,neg_recall,map,mrr");
  CHECK(first.rfind("0.000000,40,80,", 0) == 0);
  CHECK(last == "0.999000,0,0,,,,,,");
}

TEST_CASE("all-correct labels leave negative recall blank", "[pipeline]") {
  SyntheticOptions opt;
  opt.incorrect_per_bug = 0;
  const SyntheticCorpus s = make_synthetic_corpus(opt);
  const Stores stores = build_builtin_stores(s.corpus, s.candidates, EmbeddingProvider{});
  const auto rows = eval_sweep(s.corpus, s.candidates, stores, PredictOptions{}, {0.0});
  const MetricReport& r = rows[0].report;
  CHECK_FALSE(r.neg_recall.has_value());
  CHECK_FALSE(r.auc.has_value());
  CHECK(*r.map == 1.0);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  CHECK(csv.str().find(",,") != std::string::npos);
}

TEST_CASE("unlabeled candidates are ignored by the sweep", "[pipeline]") {
  SyntheticCorpus s = make_synthetic_corpus();
  const std::size_t labeled = s.candidates.size();
  Patch extra = s.candidates.front();
  extra.id = "unlabeled-extra";
  extra.label = Label::unlabeled;
  s.candidates.push_back(extra);
  const Stores stores = build_builtin_stores(s.corpus, s.candidates, EmbeddingProvider{});
  const auto rows = eval_sweep(s.corpus, s.candidates, stores, PredictOptions{}, {0.0});
  CHECK(rows[0].report.n_assessed == labeled);
}

TEST_CASE("cluster lab reports a non-increasing SSE curve", "[pipeline]") {
  const SyntheticCorpus s = make_synthetic_corpus();
  const Stores stores = build_builtin_stores(s.corpus, {}, EmbeddingProvider{});
  const auto report = cluster_lab(s.corpus, stores, {2, 8, 16}, 42);
  const auto& curve = report["sse_curve"];
  REQUIRE(curve.size() == 16);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i][0] == i + 1);
    CHECK(curve[i][1].get<double>() <= curve[i - 1][1].get<double>() + 1e-9);
  }
  REQUIRE(report["runs"].size() == 3);
  const auto& run = report["runs"][1];
  CHECK(run["k"] == 8);
  CHECK(run["tests"]["csc"].get<double>() > 0.0);
  CHECK(run["members"].size() == 8);

  CHECK(throws_kind([&] { cluster_lab(s.corpus, stores, {100000}, 42); }, ErrorKind::too_few_points));
}

TEST_CASE("hypothesis report lists per-project medians", "[pipeline]") {
  const SyntheticCorpus s = make_synthetic_corpus();
  const Stores stores = build_builtin_stores(s.corpus, {}, EmbeddingProvider{});
  const ScenarioResult r = scenario_h_vs_n(s.corpus, stores.tests, stores.patches, Scope::all_projects, std::nullopt);
  const auto j = hypothesis_report(r, std::nullopt, default_sweep());
  REQUIRE(j["projects"].size() == 4);
  for (const auto& p : j["projects"]) CHECK(p["median_h"].get<double>() > p["median_n"].get<double>());
}

TEST_CASE("combine_run moves abstentions to the external source", "[pipeline]") {
  const NullCheckFixture f = write_null_check_fixture("pipe_comb_");
  const RunConfig config = external_config(f);
  const Workspace ws = load_workspace(config, true);
  ExternalPredictions ext;
  ext["Chart-26-SOFix"] = {Verdict::incorrect, 0.1};
  ext["Chart-26-KaliA"] = {Verdict::incorrect, std::nullopt};

  const CombineResult all_ext = combine_run(ws.corpus, ws.candidates, ws.stores, PredictOptions::from(config), 1.01, ext);
  CHECK(all_ext.external_fraction == 1.0);
  CHECK(by_id(all_ext.records, "Chart-26-KaliA").score == 0.0);

  const CombineResult all_bats = combine_run(ws.corpus, ws.candidates, ws.stores, PredictOptions::from(config), 0.0, ext);
  CHECK(all_bats.bats_fraction == 1.0);
  CHECK(all_bats.bats_fraction + all_bats.external_fraction == 1.0);

  PredictOptions lev = PredictOptions::from(config);
  lev.measure = SimilarityMeasure::levenshtein_sim;
  CHECK(throws_kind([&] { combine_run(ws.corpus, ws.candidates, ws.stores, lev, 0.5, ext); }, ErrorKind::config));
}
