// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "patchtriage/error.hpp"

namespace patchtriage {

/// One assessed prediction: ground truth (`correct`) and the predicted
/// verdict (`predicted_correct`), plus the score used for ranking metrics.
struct LabeledScore {
  std::string patch_id;
  double score = 0.0;
  bool correct = false;
  bool predicted_correct = false;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

inline ConfusionCounts confusion(const std::vector<LabeledScore>& items) noexcept {
  ConfusionCounts c;
  for (const LabeledScore& x : items) {
    if (x.correct) {
      x.predicted_correct ? ++c.tp : ++c.fn;
    } else {
      x.predicted_correct ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

/// +Recall: share of correct patches predicted correct.
inline double pos_recall(const std::vector<LabeledScore>& items) {
  const ConfusionCounts c = confusion(items);
  if (c.tp + c.fn == 0) throw Error(ErrorKind::missing_class, "no patch labeled correct");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// -Recall: share of incorrect patches filtered out.
inline double neg_recall(const std::vector<LabeledScore>& items) {
  const ConfusionCounts c = confusion(items);
  if (c.tn + c.fp == 0) throw Error(ErrorKind::missing_class, "no patch labeled incorrect");
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

inline std::pair<double, double> pos_neg_recall(const std::vector<LabeledScore>& items) {
  return {pos_recall(items), neg_recall(items)};
}

/// Mann-Whitney AUC over scores, correct = positive; tied positive/negative
/// pairs count one half.
inline double auc(const std::vector<LabeledScore>& items) {
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(items.size());
  std::size_t n_pos = 0;
  for (const LabeledScore& x : items) {
    sorted.emplace_back(x.score, x.correct);
    n_pos += x.correct ? 1 : 0;
  }
  const std::size_t n_neg = items.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::missing_class, "AUC needs both labels");
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Twice the Mann-Whitney U, kept integral until the final division.
  unsigned long long twice_u = 0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t pos_here = 0;
    std::size_t neg_here = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      sorted[j].second ? ++pos_here : ++neg_here;
      ++j;
    }
    twice_u += 2ULL * pos_here * neg_below + static_cast<unsigned long long>(pos_here) * neg_here;
    neg_below += neg_here;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct F1Result {
  double value = 0.0;
  bool degenerate = false;  // TP == 0: precision or recall undefined or zero
};

inline F1Result f1(const std::vector<LabeledScore>& items) {
  const ConfusionCounts c = confusion(items);
  if (c.tp == 0) return {0.0, true};
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return {2.0 * precision * recall / (precision + recall), false};
}

/// Average precision of one ranked list (true = correct patch). Lists with
/// no correct entry have no AP.
inline std::optional<double> average_precision(const std::vector<bool>& ranked) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    if (!ranked[j]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(j + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

inline std::optional<double> reciprocal_rank(const std::vector<bool>& ranked) {
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    if (ranked[j]) return 1.0 / static_cast<double>(j + 1);
  }
  return std::nullopt;
}

/// MAP and MRR over per-bug ranked lists, skipping lists without a correct
/// patch.
inline std::pair<double, double> map_mrr(const std::vector<std::vector<bool>>& ranked_lists) {
  double ap_sum = 0.0;
  double rr_sum = 0.0;
  std::size_t n = 0;
  for (const auto& list : ranked_lists) {
    const auto ap = average_precision(list);
    if (!ap) continue;
    ap_sum += *ap;
    rr_sum += *reciprocal_rank(list);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::no_relevant_anywhere, "no ranked list contains a correct patch");
  return {ap_sum / static_cast<double>(n), rr_sum / static_cast<double>(n)};
}

/// Everything a sweep row reports. Metrics that are undefined for the
/// population (a missing class, no correct patch anywhere) stay empty.
struct MetricReport {
  std::optional<double> auc;
  F1Result f1;
  std::optional<double> pos_recall;
  std::optional<double> neg_recall;
  std::optional<double> map;
  std::optional<double> mrr;
  ConfusionCounts counts;
  std::size_t n_assessed = 0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
};

/// `ranked_lists` are the per-bug rankings of the same assessed items.
inline MetricReport evaluate(const std::vector<LabeledScore>& items, const std::vector<std::vector<bool>>& ranked_lists) {
  MetricReport r;
  r.counts = confusion(items);
  r.n_assessed = items.size();
  r.n_correct = r.counts.tp + r.counts.fn;
  r.n_incorrect = r.counts.tn + r.counts.fp;
  r.f1 = f1(items);
  if (r.n_correct > 0) r.pos_recall = pos_recall(items);
  if (r.n_incorrect > 0) r.neg_recall = neg_recall(items);
  if (r.n_correct > 0 && r.n_incorrect > 0) r.auc = auc(items);
  try {
    const auto [m, rr] = map_mrr(ranked_lists);
    r.map = m;
    r.mrr = rr;
  } catch (const Error&) {
  }
  return r;
}

}  // namespace patchtriage
