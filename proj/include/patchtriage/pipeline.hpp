// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

// End-to-end drivers behind the command-line tool: store construction,
// batch prediction, evaluation sweeps, the clustering lab, the scenario
// study and the external combiner. Every driver is deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "patchtriage/clusterlab.hpp"
#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"
#include "patchtriage/error.hpp"
#include "patchtriage/metrics.hpp"
#include "patchtriage/predictor.hpp"
#include "patchtriage/simindex.hpp"

namespace patchtriage {

enum class Embedder { builtin, external };

/// Which predictor scores candidates. With `bats`, a levenshtein measure
/// selects the raw-string ablation over the same retrieved neighbors.
enum class Method { bats, history };

struct RunConfig {
  std::string corpus_path;
  std::string candidates_path;
  std::optional<std::string> test_vecs_path;
  std::optional<std::string> patch_vecs_path;
  Embedder embedder = Embedder::builtin;
  std::size_t dim = kDefaultDim;
  std::uint64_t seed = kDefaultSeed;
  SimilarityMeasure measure = SimilarityMeasure::cosine;
  Method method = Method::bats;
  Thresholds thresholds;
  Scope scope = Scope::all_projects;
  std::string output_path;

  void validate() const {
    if (embedder == Embedder::external && (!test_vecs_path || !patch_vecs_path)) {
      throw Error(ErrorKind::config, "external embedder requires --test-vecs and --patch-vecs");
    }
    if (embedder == Embedder::builtin && (test_vecs_path || patch_vecs_path)) {
      throw Error(ErrorKind::config, "builtin embedder does not accept vector files");
    }
    if (dim < 2) throw Error(ErrorKind::config, "--dim must be at least 2");
    if (thresholds.k == 0) throw Error(ErrorKind::config, "--k must be positive");
    const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(thresholds.t_test) || !unit(thresholds.t_patch)) {
      throw Error(ErrorKind::config, "--t-test and --t-patch must lie in [0, 1]");
    }
    if (method == Method::history && measure == SimilarityMeasure::levenshtein_sim) {
      throw Error(ErrorKind::config, "the history baseline compares vectors; use cosine or euclidean");
    }
  }
};

struct Stores {
  VectorStore tests;
  VectorStore patches;
};

/// Builtin vectors for every corpus test, corpus patch and candidate. A
/// candidate sharing an id with a corpus patch must carry the same diff.
inline Stores build_builtin_stores(const Corpus& corpus, const std::vector<Patch>& candidates,
                                   const EmbeddingProvider& provider) {
  Stores s{VectorStore(provider.name), VectorStore(provider.name)};
  for (const TestCase& t : corpus.tests()) s.tests.insert(t.id, embed_test(t, provider));
  for (const Patch& p : corpus.patches()) s.patches.insert(p.id, embed_patch(p, provider));
  for (const Patch& c : candidates) {
    if (const Patch* known = corpus.find_patch(c.id)) {
      if (known->diff != c.diff) {
        throw Error(ErrorKind::validation, "candidate '" + c.id + "' reuses a corpus patch id with a different diff");
      }
      continue;
    }
    s.patches.insert(c.id, embed_patch(c, provider));
  }
  return s;
}

struct Workspace {
  Corpus corpus;
  std::vector<Patch> candidates;
  Stores stores;
};

inline Workspace load_workspace(const RunConfig& config, bool with_candidates) {
  config.validate();
  Workspace ws;
  ws.corpus = load_corpus(config.corpus_path);
  if (with_candidates) {
    if (config.candidates_path.empty()) throw Error(ErrorKind::config, "--candidates is required");
    ws.candidates = load_candidates(config.candidates_path);
  }
  if (config.embedder == Embedder::builtin) {
    EmbeddingProvider provider;
    provider.dim = config.dim;
    provider.seed = config.seed;
    ws.stores = build_builtin_stores(ws.corpus, ws.candidates, provider);
  } else {
    ws.stores.tests = load_vector_store(*config.test_vecs_path);
    ws.stores.patches = load_vector_store(*config.patch_vecs_path);
  }
  return ws;
}

struct PredictOptions {
  Thresholds thresholds;
  SimilarityMeasure measure = SimilarityMeasure::cosine;
  Method method = Method::bats;
  Scope scope = Scope::all_projects;

  static PredictOptions from(const RunConfig& c) { return {c.thresholds, c.measure, c.method, c.scope}; }
};

/// One prediction per candidate, in candidate order. The candidate's own bug
/// is left out of the search space, and its corpus tests are the failing
/// tests. A candidate whose prediction throws gets an error verdict.
inline std::vector<PredictionRecord> predict_candidates(const Corpus& corpus, const std::vector<Patch>& candidates,
                                                        const Stores& stores, const PredictOptions& opt) {
  std::vector<PredictionRecord> out;
  out.reserve(candidates.size());
  std::map<BugId, std::pair<SearchSpace, std::vector<TestCase>>> per_bug;
  for (const Patch& c : candidates) {
    auto it = per_bug.find(c.bug);
    if (it == per_bug.end()) {
      it = per_bug.emplace(c.bug, std::make_pair(make_search_space(corpus, c.bug, opt.scope), corpus.tests_of(c.bug)))
               .first;
    }
    const auto& [space, failing] = it->second;
    try {
      if (opt.method == Method::history) {
        out.push_back(predict_baseline_history(c, space, stores.patches, opt.thresholds, opt.measure));
      } else if (opt.measure == SimilarityMeasure::levenshtein_sim) {
        const auto neighbors = retrieve_similar_tests(failing, space, stores.tests, opt.thresholds.k,
                                                      opt.thresholds.t_test);
        out.push_back(predict_baseline_levenshtein(c, neighbors, corpus, opt.thresholds));
      } else {
        out.push_back(predict_bats(c, failing, space, stores.tests, stores.patches, opt.thresholds, opt.measure));
      }
    } catch (const Error& e) {
      PredictionRecord r;
      r.patch_id = c.id;
      r.score = std::nan("");
      r.verdict = Verdict::error;
      r.source = opt.method == Method::history ? PredictionSource::baseline_history
                 : opt.measure == SimilarityMeasure::levenshtein_sim ? PredictionSource::baseline_levenshtein
                                                                     : PredictionSource::bats;
      r.message = e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct RankedGroup {
  BugId bug;
  std::vector<PredictionRecord> records;  // ranked
};

/// Groups records by candidate bug (first-appearance order) and ranks each group.
inline std::vector<RankedGroup> rank_by_bug(const std::vector<Patch>& candidates,
                                            const std::vector<PredictionRecord>& records) {
  std::vector<RankedGroup> groups;
  std::map<BugId, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto [it, inserted] = index.try_emplace(candidates[i].bug, groups.size());
    if (inserted) groups.push_back(RankedGroup{candidates[i].bug, {}});
    groups[it->second].records.push_back(records[i]);
  }
  for (RankedGroup& g : groups) g.records = rank_candidates(std::move(g.records));
  return groups;
}

struct VerdictCounts {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t abstain = 0;
  std::size_t error = 0;
};

inline VerdictCounts count_verdicts(const std::vector<PredictionRecord>& records) {
  VerdictCounts c;
  for (const PredictionRecord& r : records) {
    switch (r.verdict) {
      case Verdict::correct: ++c.correct; break;
      case Verdict::incorrect: ++c.incorrect; break;
      case Verdict::abstain: ++c.abstain; break;
      case Verdict::error: ++c.error; break;
    }
  }
  return c;
}

/// Prediction report: one JSON object per record, grouped by bug, ranked.
inline void write_prediction_report(std::ostream& out, const std::vector<RankedGroup>& groups) {
  for (const RankedGroup& g : groups) {
    std::size_t rank = 0;
    for (const PredictionRecord& r : g.records) {
      nlohmann::ordered_json j;
      j["bug"] = g.bug.str();
      j["rank"] = r.decided() ? nlohmann::ordered_json(++rank) : nlohmann::ordered_json(nullptr);
      const nlohmann::ordered_json fields = to_json(r);
      for (const auto& [key, value] : fields.items()) j[key] = value;
      out << j.dump() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

inline const std::vector<double>& default_sweep() {
  static const std::vector<double> sweep = {0.0, 0.6, 0.7, 0.8, 0.9};
  return sweep;
}

/// Metrics over decided, labeled records; abstentions and errors are left
/// out and only counted through n_assessed.
inline MetricReport evaluate_predictions(const std::vector<Patch>& candidates,
                                         const std::vector<PredictionRecord>& records) {
  std::vector<LabeledScore> items;
  std::map<BugId, std::vector<PredictionRecord>> by_bug;
  std::unordered_map<std::string, bool> truth;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Patch& c = candidates[i];
    const PredictionRecord& r = records[i];
    if (c.label == Label::unlabeled || !r.decided()) continue;
    const bool correct = c.label == Label::correct;
    truth[c.id] = correct;
    items.push_back(LabeledScore{c.id, r.score, correct, r.verdict == Verdict::correct});
    by_bug[c.bug].push_back(r);
  }
  std::vector<std::vector<bool>> lists;
  for (auto& [bug, recs] : by_bug) {
    std::vector<bool> list;
    for (const PredictionRecord& r : rank_candidates(std::move(recs))) list.push_back(truth.at(r.patch_id));
    lists.push_back(std::move(list));
  }
  return evaluate(items, lists);
}

struct SweepRow {
  double t_test = 0.0;
  MetricReport report;
};

inline std::vector<SweepRow> eval_sweep(const Corpus& corpus, const std::vector<Patch>& candidates,
                                        const Stores& stores, PredictOptions opt, const std::vector<double>& sweep) {
  std::vector<Patch> labeled;
  for (const Patch& c : candidates) {
    if (c.label != Label::unlabeled) labeled.push_back(c);
  }
  std::vector<SweepRow> rows;
  for (const double t : sweep) {
    opt.thresholds.t_test = t;
    const auto records = predict_candidates(corpus, labeled, stores, opt);
    rows.push_back(SweepRow{t, evaluate_predictions(labeled, records)});
  }
  return rows;
}

namespace detail {

inline std::string csv_number(std::optional<double> x) {
  if (!x) return "";
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << *x;
  return s.str();
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "t_test,n_correct,n_incorrect,auc,f1,pos_recall,neg_recall,map,mrr\n";
  for (const SweepRow& row : rows) {
    const MetricReport& r = row.report;
    const std::optional<double> f1 =
        r.n_assessed == 0 ? std::nullopt : std::optional<double>(r.f1.value);
    out << detail::csv_number(row.t_test) << ',' << r.n_correct << ',' << r.n_incorrect << ','
        << detail::csv_number(r.auc) << ',' << detail::csv_number(f1) << ',' << detail::csv_number(r.pos_recall)
        << ',' << detail::csv_number(r.neg_recall) << ',' << detail::csv_number(r.map) << ','
        << detail::csv_number(r.mrr) << '\n';
  }
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  const auto opt = [](std::optional<double> x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["auc"] = opt(r.auc);
  j["f1"] = r.f1.value;
  j["f1_degenerate"] = r.f1.degenerate;
  j["pos_recall"] = opt(r.pos_recall);
  j["neg_recall"] = opt(r.neg_recall);
  j["map"] = opt(r.map);
  j["mrr"] = opt(r.mrr);
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["tn"] = r.counts.tn;
  j["fn"] = r.counts.fn;
  j["n_assessed"] = r.n_assessed;
  return j;
}

// ---------------------------------------------------------------------------
// Clustering lab

/// Vectors of the linked tests (corpus order) and of their patches.
inline Stores linked_stores(const Corpus& corpus, const Stores& all) {
  Stores s{VectorStore(all.tests.provider()), VectorStore(all.patches.provider())};
  for (const TestCase& t : corpus.tests()) {
    const Patch* p = corpus.linked_patch(t.id);
    if (p == nullptr) continue;
    s.tests.insert(t.id, all.tests.at(t.id));
    if (!s.patches.contains(p->id)) s.patches.insert(p->id, all.patches.at(p->id));
  }
  return s;
}

inline nlohmann::ordered_json cluster_lab(const Corpus& corpus, const Stores& stores, const std::vector<std::size_t>& ks,
                                          std::uint64_t seed) {
  if (ks.empty()) throw Error(ErrorKind::config, "no k requested");
  const Stores linked = linked_stores(corpus, stores);
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  const auto path = bisecting_kmeans_path(linked.tests, k_max, seed);

  nlohmann::ordered_json report;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const Clustering& c : path) curve.push_back({c.k, sse(c, linked.tests)});
  report["sse_curve"] = std::move(curve);

  const auto opt = [](std::optional<double> x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(); };
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const std::size_t k : ks) {
    const Clustering& c = path[k - 1];
    nlohmann::ordered_json run;
    run["k"] = k;
    if (k < 2) {
      run["sse"] = sse(c, linked.tests);
      runs.push_back(std::move(run));
      continue;
    }
    const ClusterReport tests = cluster_report(c, linked.tests);
    const Grouping patch_groups = induced_patch_grouping(c, corpus);
    std::optional<ClusterReport> patches;
    try {
      patches = cluster_report(patch_groups, linked.patches);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_clustering) throw;
    }

    std::optional<double> r;
    if (patches) {
      std::vector<double> xs;
      std::vector<double> ys;
      for (std::size_t i = 0; i < k; ++i) {
        if (tests.cluster_sc[i] && patches->cluster_sc[i]) {
          xs.push_back(*tests.cluster_sc[i]);
          ys.push_back(*patches->cluster_sc[i]);
        }
      }
      try {
        r = pearson(xs, ys);
      } catch (const Error&) {
      }
    }

    const auto summary = [&](const ClusterReport& cr) {
      nlohmann::ordered_json j;
      j["sse"] = cr.sse;
      j["csc"] = cr.csc;
      j["qualified"] = {cr.qualified, cr.nonempty_clusters};
      nlohmann::ordered_json per = nlohmann::ordered_json::array();
      for (const auto& x : cr.cluster_sc) per.push_back(opt(x));
      j["cluster_sc"] = std::move(per);
      return j;
    };
    run["tests"] = summary(tests);
    run["patches"] = patches ? summary(*patches) : nlohmann::ordered_json();
    run["pearson_r"] = opt(r);
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < k; ++i) members.push_back(nlohmann::ordered_json::array());
    for (std::size_t i = 0; i < c.ids.size(); ++i) members[c.labels[i]].push_back(c.ids[i]);
    run["members"] = std::move(members);
    runs.push_back(std::move(run));
  }
  report["runs"] = std::move(runs);
  return report;
}

// ---------------------------------------------------------------------------
// Scenario H vs. N

inline nlohmann::ordered_json hypothesis_report(const ScenarioResult& result, std::optional<double> t_test,
                                                const std::vector<double>& thresholds) {
  const auto opt = [](std::optional<double> x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["t_test"] = opt(t_test);
  nlohmann::ordered_json projects = nlohmann::ordered_json::array();
  for (const ProjectScenario& p : result.projects) {
    nlohmann::ordered_json pj;
    pj["project"] = p.project;
    pj["h"] = p.h;
    pj["n"] = p.n;
    pj["median_h"] = opt(median(p.h));
    pj["median_n"] = opt(median(p.n));
    projects.push_back(std::move(pj));
  }
  j["projects"] = std::move(projects);
  nlohmann::ordered_json below = nlohmann::ordered_json::array();
  for (const double t : thresholds) {
    std::size_t count = 0;
    for (const ScenarioSample& s : result.samples) count += s.best_test_similarity < t ? 1 : 0;
    below.push_back({{"threshold", t},
                     {"count", count},
                     {"total", result.samples.size()},
                     {"fraction", static_cast<double>(count) / static_cast<double>(result.samples.size())}});
  }
  j["best_test_similarity_below"] = std::move(below);
  return j;
}

// ---------------------------------------------------------------------------
// Combination with external predictors

struct CombineResult {
  std::vector<PredictionRecord> records;  // candidate order
  double bats_fraction = 0.0;
  double external_fraction = 0.0;
};

inline CombineResult combine_run(const Corpus& corpus, const std::vector<Patch>& candidates, const Stores& stores,
                                 PredictOptions opt, double gate, const ExternalPredictions& external) {
  if (opt.measure == SimilarityMeasure::levenshtein_sim || opt.method != Method::bats) {
    throw Error(ErrorKind::config, "combination runs use vector predictions");
  }
  opt.thresholds.t_test = gate;
  CombineResult out;
  out.records = combine_with_external(predict_candidates(corpus, candidates, stores, opt), external);
  std::size_t n_bats = 0;
  std::size_t n_external = 0;
  for (const PredictionRecord& r : out.records) {
    (r.source == PredictionSource::external ? n_external : n_bats) += 1;
  }
  if (!out.records.empty()) {
    out.bats_fraction = static_cast<double>(n_bats) / static_cast<double>(out.records.size());
    out.external_fraction = static_cast<double>(n_external) / static_cast<double>(out.records.size());
  }
  return out;
}

}  // namespace patchtriage
