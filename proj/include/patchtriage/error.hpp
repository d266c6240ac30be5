// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patchtriage {

/// Every failure the library raises carries one of these kinds. The CLI maps
/// kinds onto process exit codes (see exit_code_for).
enum class ErrorKind {
  io,
  parse,
  validation,
  dimension_mismatch,
  missing_vector,
  zero_vector,
  empty_tokens,
  no_changed_lines,
  empty_neighbor_set,
  empty_search_space,
  missing_external_prediction,
  too_few_points,
  degenerate_clustering,
  unlinked_test,
  zero_variance,
  missing_class,
  no_relevant_anywhere,
  empty_scope,
  invalid_argument,
  config,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "IOError";
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::validation: return "ValidationError";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::missing_vector: return "MissingVector";
    case ErrorKind::zero_vector: return "ZeroVector";
    case ErrorKind::empty_tokens: return "EmptyTokens";
    case ErrorKind::no_changed_lines: return "NoChangedLines";
    case ErrorKind::empty_neighbor_set: return "EmptyNeighborSet";
    case ErrorKind::empty_search_space: return "EmptySearchSpace";
    case ErrorKind::missing_external_prediction: return "MissingExternalPrediction";
    case ErrorKind::too_few_points: return "TooFewPoints";
    case ErrorKind::degenerate_clustering: return "DegenerateClustering";
    case ErrorKind::unlinked_test: return "UnlinkedTest";
    case ErrorKind::zero_variance: return "ZeroVariance";
    case ErrorKind::missing_class: return "MissingClass";
    case ErrorKind::no_relevant_anywhere: return "NoRelevantAnywhere";
    case ErrorKind::empty_scope: return "EmptyScope";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::config: return "ConfigError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 0 success, 1 I/O, 2 validation, 3 configuration or domain failure.
constexpr int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return 1;
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::dimension_mismatch: return 2;
    default: return 3;
  }
}

}  // namespace patchtriage
