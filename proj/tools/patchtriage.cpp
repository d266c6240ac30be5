// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "patchtriage/patchtriage.hpp"

namespace pt = patchtriage;

namespace {

struct Options {
  pt::RunConfig config;
  std::string test_vecs;
  std::string patch_vecs;
  std::string embedder = "builtin";
  std::string measure = "cosine";
  std::string method = "bats";
  std::string scope = "all";
  std::string k_spec;  // cluster: "40", "2..10" or "30,40,50"
  std::optional<double> t_test;
  std::string external;
  double gate = 0.9;
  std::vector<double> sweep;
};

void add_corpus(CLI::App* cmd, Options& o) {
  cmd->add_option("--corpus", o.config.corpus_path, "corpus JSONL")->required();
}

void add_embedding(CLI::App* cmd, Options& o) {
  cmd->add_option("--embedder", o.embedder, "builtin or external")->check(CLI::IsMember({"builtin", "external"}));
  cmd->add_option("--test-vecs", o.test_vecs, "test vector JSONL (external embedder)");
  cmd->add_option("--patch-vecs", o.patch_vecs, "patch vector JSONL (external embedder)");
  cmd->add_option("--dim", o.config.dim, "builtin embedding dimension");
  cmd->add_option("--seed", o.config.seed, "builtin hashing / clustering seed");
}

void add_prediction(CLI::App* cmd, Options& o, bool with_k = true) {
  cmd->add_option("--candidates", o.config.candidates_path, "candidate patches JSONL")->required();
  cmd->add_option("--measure", o.measure, "cosine, euclidean or levenshtein")
      ->check(CLI::IsMember({"cosine", "euclidean", "levenshtein"}));
  cmd->add_option("--method", o.method, "bats or history")->check(CLI::IsMember({"bats", "history"}));
  if (with_k) cmd->add_option("--k", o.config.thresholds.k, "maximum neighbors");
  cmd->add_option("--t-patch", o.config.thresholds.t_patch, "patch decision threshold");
  cmd->add_option("--scope", o.scope, "all or other")->check(CLI::IsMember({"all", "other"}));
}

void finish_config(Options& o) {
  pt::RunConfig& c = o.config;
  c.embedder = o.embedder == "external" ? pt::Embedder::external : pt::Embedder::builtin;
  if (!o.test_vecs.empty()) c.test_vecs_path = o.test_vecs;
  if (!o.patch_vecs.empty()) c.patch_vecs_path = o.patch_vecs;
  c.measure = *pt::parse_measure(o.measure);
  c.method = o.method == "history" ? pt::Method::history : pt::Method::bats;
  c.scope = o.scope == "other" ? pt::Scope::other_projects_only : pt::Scope::all_projects;
  if (o.t_test) c.thresholds.t_test = *o.t_test;
}

/// Writes to --out if given, stdout otherwise.
template <typename Fn>
void emit(const std::string& out_path, Fn&& write) {
  if (out_path.empty()) {
    write(std::cout);
    return;
  }
  std::ostringstream buffer;
  write(buffer);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw pt::Error(pt::ErrorKind::io, "cannot write '" + out_path + "'");
  out << buffer.str();
  if (!out) throw pt::Error(pt::ErrorKind::io, "write to '" + out_path + "' failed");
}

std::vector<std::size_t> parse_k_spec(const std::string& spec) {
  const auto to_size = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) {
      throw pt::Error(pt::ErrorKind::config, "bad --k value '" + spec + "'");
    }
    return v;
  };
  std::vector<std::size_t> ks;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const std::size_t lo = to_size(std::string_view(spec).substr(0, dots));
    const std::size_t hi = to_size(std::string_view(spec).substr(dots + 2));
    if (lo > hi) throw pt::Error(pt::ErrorKind::config, "empty --k range '" + spec + "'");
    for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', start), spec.size());
    ks.push_back(to_size(std::string_view(spec).substr(start, comma - start)));
    start = comma + 1;
  }
  return ks;
}

int cmd_validate(const Options& o) {
  const pt::Corpus corpus = pt::load_corpus(o.config.corpus_path);
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t unlabeled = 0;
  for (const pt::Patch& p : corpus.patches()) {
    switch (p.label) {
      case pt::Label::correct: ++correct; break;
      case pt::Label::incorrect: ++incorrect; break;
      case pt::Label::unlabeled: ++unlabeled; break;
    }
  }
  std::cout << "tests: " << corpus.tests().size() << "\n"
            << "patches: " << corpus.patches().size() << " (correct " << correct << ", incorrect " << incorrect
            << ", unlabeled " << unlabeled << ")\n"
            << "links: " << corpus.links().size() << "\n";
  return 0;
}

int cmd_embed(const Options& o) {
  pt::RunConfig config = o.config;
  // Output paths, not inputs: bypass the builtin/external consistency check.
  config.test_vecs_path.reset();
  config.patch_vecs_path.reset();
  config.embedder = pt::Embedder::builtin;
  if (o.test_vecs.empty() || o.patch_vecs.empty()) {
    throw pt::Error(pt::ErrorKind::config, "embed needs --test-vecs and --patch-vecs output paths");
  }
  const bool with_candidates = !config.candidates_path.empty();
  const pt::Workspace ws = pt::load_workspace(config, with_candidates);
  emit(o.test_vecs, [&](std::ostream& out) { pt::write_vector_store(out, ws.stores.tests); });
  emit(o.patch_vecs, [&](std::ostream& out) { pt::write_vector_store(out, ws.stores.patches); });
  return 0;
}

int cmd_predict(const Options& o) {
  const pt::Workspace ws = pt::load_workspace(o.config, true);
  const auto records =
      pt::predict_candidates(ws.corpus, ws.candidates, ws.stores, pt::PredictOptions::from(o.config));
  const auto groups = pt::rank_by_bug(ws.candidates, records);
  emit(o.config.output_path, [&](std::ostream& out) { pt::write_prediction_report(out, groups); });
  const pt::VerdictCounts c = pt::count_verdicts(records);
  (o.config.output_path.empty() ? std::cerr : std::cout)
      << "candidates: " << records.size() << " correct: " << c.correct << " incorrect: " << c.incorrect
      << " abstain: " << c.abstain << " error: " << c.error << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  const pt::Workspace ws = pt::load_workspace(o.config, true);
  const std::vector<double>& sweep = o.sweep.empty() ? pt::default_sweep() : o.sweep;
  for (const double t : sweep) {
    if (t < 0.0 || t > 1.0) throw pt::Error(pt::ErrorKind::config, "--sweep values must lie in [0, 1]");
  }
  const auto rows = pt::eval_sweep(ws.corpus, ws.candidates, ws.stores, pt::PredictOptions::from(o.config), sweep);
  emit(o.config.output_path, [&](std::ostream& out) { pt::write_sweep_csv(out, rows); });
  return 0;
}

int cmd_cluster(const Options& o) {
  const std::vector<std::size_t> ks = parse_k_spec(o.k_spec.empty() ? "40" : o.k_spec);
  const pt::Workspace ws = pt::load_workspace(o.config, false);
  const auto report = pt::cluster_lab(ws.corpus, ws.stores, ks, o.config.seed);
  emit(o.config.output_path, [&](std::ostream& out) { out << report.dump(2) << '\n'; });
  return 0;
}

int cmd_hypothesis(const Options& o) {
  const pt::Workspace ws = pt::load_workspace(o.config, false);
  const auto result = pt::scenario_h_vs_n(ws.corpus, ws.stores.tests, ws.stores.patches, o.config.scope, o.t_test);
  const auto report = pt::hypothesis_report(result, o.t_test, pt::default_sweep());
  emit(o.config.output_path, [&](std::ostream& out) { out << report.dump(2) << '\n'; });
  return 0;
}

int cmd_combine(const Options& o) {
  if (o.external.empty()) throw pt::Error(pt::ErrorKind::config, "--external is required");
  const pt::Workspace ws = pt::load_workspace(o.config, true);
  const pt::ExternalPredictions external = pt::load_external_predictions(o.external);
  const auto result =
      pt::combine_run(ws.corpus, ws.candidates, ws.stores, pt::PredictOptions::from(o.config), o.gate, external);
  const auto groups = pt::rank_by_bug(ws.candidates, result.records);
  emit(o.config.output_path, [&](std::ostream& out) { pt::write_prediction_report(out, groups); });
  nlohmann::ordered_json summary = {{"gate", o.gate},
                                    {"candidates", result.records.size()},
                                    {"bats_fraction", result.bats_fraction},
                                    {"external_fraction", result.external_fraction}};
  (o.config.output_path.empty() ? std::cerr : std::cout) << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch correctness triage by failing-test similarity"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "check a corpus and print counts");
  add_corpus(validate, o);

  auto* embed = app.add_subcommand("embed", "export builtin vectors in the interchange format");
  add_corpus(embed, o);
  embed->add_option("--candidates", o.config.candidates_path, "candidate patches JSONL");
  embed->add_option("--test-vecs", o.test_vecs, "output path for test vectors")->required();
  embed->add_option("--patch-vecs", o.patch_vecs, "output path for patch vectors")->required();
  embed->add_option("--dim", o.config.dim, "builtin embedding dimension");
  embed->add_option("--seed", o.config.seed, "builtin hashing seed");

  auto* predict = app.add_subcommand("predict", "predict correctness of candidate patches");
  auto* eval = app.add_subcommand("eval", "metric sweep over test-similarity thresholds");
  auto* combine = app.add_subcommand("combine", "fill abstentions from an external predictor");
  for (auto* cmd : {predict, eval, combine}) {
    add_corpus(cmd, o);
    add_embedding(cmd, o);
    add_prediction(cmd, o);
    cmd->add_option("--out", o.config.output_path, "report path (default stdout)");
  }
  for (auto* cmd : {predict, eval}) cmd->add_option("--t-test", o.t_test, "test similarity threshold");
  eval->add_option("--sweep", o.sweep, "t_test values (default 0.0 0.6 0.7 0.8 0.9)")->delimiter(',');
  combine->add_option("--external", o.external, "external predictions JSONL")->required();
  combine->add_option("--gate", o.gate, "test similarity required for a local verdict");

  auto* cluster = app.add_subcommand("cluster", "bisecting k-means lab over test vectors");
  auto* hypothesis = app.add_subcommand("hypothesis", "scenario H vs. N study");
  for (auto* cmd : {cluster, hypothesis}) {
    add_corpus(cmd, o);
    add_embedding(cmd, o);
    cmd->add_option("--out", o.config.output_path, "report path (default stdout)");
  }
  cluster->add_option("--k", o.k_spec, "k, lo..hi or a comma list (default 40)");
  hypothesis->add_option("--t-test", o.t_test, "only keep H when the best test similarity exceeds this");
  hypothesis->add_option("--scope", o.scope, "all or other")->check(CLI::IsMember({"all", "other"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    finish_config(o);
    if (*validate) return cmd_validate(o);
    if (*embed) return cmd_embed(o);
    if (*predict) return cmd_predict(o);
    if (*eval) return cmd_eval(o);
    if (*cluster) return cmd_cluster(o);
    if (*hypothesis) return cmd_hypothesis(o);
    if (*combine) return cmd_combine(o);
  } catch (const pt::Error& e) {
    std::cerr << e.what() << "\n";
    return pt::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
