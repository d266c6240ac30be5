// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

// Minimal library walkthrough: load a corpus and a candidate file, embed both
// with the builtin hasher, and print one verdict per candidate.
//
//   triage_sample data/sample/corpus.jsonl data/sample/candidates.jsonl

#include <cstdio>
#include <iostream>

#include "patchtriage/patchtriage.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: triage_sample CORPUS CANDIDATES\n";
    return 3;
  }
  try {
    patchtriage::RunConfig config;
    config.corpus_path = argv[1];
    config.candidates_path = argv[2];
    config.thresholds.t_test = 0.6;

    const patchtriage::Workspace ws = patchtriage::load_workspace(config, /*with_candidates=*/true);
    const auto records = patchtriage::predict_candidates(ws.corpus, ws.candidates, ws.stores,
                                                         patchtriage::PredictOptions::from(config));
    for (const auto& r : records) {
      std::printf("%-16s %-9s", r.patch_id.c_str(), std::string(patchtriage::to_string(r.verdict)).c_str());
      if (r.decided()) std::printf(" score=%.4f", r.score);
      if (!r.evidence.empty()) {
        std::printf(" nearest=%s (%.4f)", r.evidence.front().test_id.c_str(), r.evidence.front().similarity);
      }
      std::printf("\n");
    }
  } catch (const patchtriage::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
