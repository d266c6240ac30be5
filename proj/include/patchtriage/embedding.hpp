// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "patchtriage/corpus.hpp"
#include "patchtriage/error.hpp"
#include "patchtriage/textprep.hpp"

namespace patchtriage {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline constexpr std::size_t kDefaultDim = 128;
inline constexpr std::uint64_t kDefaultSeed = 42;

enum class ProviderKind { builtin_hash, external_file };

struct EmbeddingProvider {
  std::string name = "builtin-hash";
  std::size_t dim = kDefaultDim;
  ProviderKind kind = ProviderKind::builtin_hash;
  std::uint64_t seed = kDefaultSeed;  // builtin only
};

/// Id -> vector map sharing one dimension. Insertion order is retained so
/// that everything derived from a store iterates deterministically.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(std::string provider) : provider_(std::move(provider)) {}

  /// Returns false if the id is already present.
  bool insert(const std::string& id, EmbeddingVector vec) {
    if (dim_ == 0) {
      dim_ = vec.dim();
    } else if (vec.dim() != dim_) {
      throw Error(ErrorKind::dimension_mismatch,
                  "vector '" + id + "' has dim " + std::to_string(vec.dim()) + ", store has " + std::to_string(dim_));
    }
    if (index_.count(id) != 0) return false;
    index_.emplace(id, vectors_.size());
    ids_.push_back(id);
    vectors_.push_back(std::move(vec));
    return true;
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const EmbeddingVector& at(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::missing_vector, "no vector for '" + id + "'");
    return vectors_[it->second];
  }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<EmbeddingVector>& vectors() const noexcept { return vectors_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& provider() const noexcept { return provider_; }

 private:
  std::string provider_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a-64 whose offset basis is XORed with `seed` (seed 0 gives plain FNV-1a).
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = kFnvOffsetBasis ^ seed;
  for (const char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

/// Signed feature hashing of a bag of tokens, L2-normalized. A vector that
/// cancels to zero maps to e_0.
inline EmbeddingVector embed_tokens_builtin(const TokenSeq& tokens, std::size_t dim, std::uint64_t seed) {
  if (tokens.empty()) throw Error(ErrorKind::empty_tokens, "cannot embed an empty token sequence");
  if (dim < 2) throw Error(ErrorKind::invalid_argument, "embedding dim must be at least 2");
  // Integer accumulation keeps the result independent of token order.
  std::vector<long long> counts(dim, 0);
  for (const std::string& token : tokens) {
    const std::uint64_t h = fnv1a64(token, seed);
    const auto bucket = static_cast<std::size_t>(h % dim);
    counts[bucket] += (h >> 63) == 0 ? 1 : -1;
  }
  EmbeddingVector out;
  out.values.assign(dim, 0.0);
  double norm2 = 0.0;
  for (const long long c : counts) norm2 += static_cast<double>(c) * static_cast<double>(c);
  if (norm2 == 0.0) {
    out.values[0] = 1.0;
    return out;
  }
  const double norm = std::sqrt(norm2);
  for (std::size_t i = 0; i < dim; ++i) out.values[i] = static_cast<double>(counts[i]) / norm;
  return out;
}

inline EmbeddingVector embed_test(const TestCase& test, const EmbeddingProvider& provider,
                                  const VectorStore* store = nullptr) {
  if (provider.kind == ProviderKind::external_file) {
    if (store == nullptr || !store->contains(test.id)) {
      throw Error(ErrorKind::missing_vector, "no vector for test '" + test.id + "'");
    }
    return store->at(test.id);
  }
  return embed_tokens_builtin(tokenize_test(test.source), provider.dim, provider.seed);
}

/// Sum of per-hunk vectors, not re-normalized.
inline EmbeddingVector embed_patch(const Patch& patch, const EmbeddingProvider& provider,
                                   const VectorStore* store = nullptr) {
  if (provider.kind == ProviderKind::external_file) {
    if (store == nullptr || !store->contains(patch.id)) {
      throw Error(ErrorKind::missing_vector, "no vector for patch '" + patch.id + "'");
    }
    return store->at(patch.id);
  }
  if (patch.hunks.empty()) throw Error(ErrorKind::empty_tokens, "patch '" + patch.id + "' has no hunks");
  std::vector<EmbeddingVector> parts;
  parts.reserve(patch.hunks.size());
  for (const Hunk& h : patch.hunks) parts.push_back(embed_tokens_builtin(tokenize_hunk(h), provider.dim, provider.seed));
  // Sum in a canonical order so that any hunk permutation yields the same bits.
  std::sort(parts.begin(), parts.end(),
            [](const EmbeddingVector& a, const EmbeddingVector& b) { return a.values < b.values; });
  EmbeddingVector sum;
  sum.values.assign(provider.dim, 0.0);
  for (const EmbeddingVector& v : parts) {
    for (std::size_t i = 0; i < provider.dim; ++i) sum.values[i] += v.values[i];
  }
  return sum;
}

inline VectorStore read_vector_store(std::istream& in, std::string provider = "external") {
  VectorStore store(std::move(provider));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_line(line)) continue;
    const nlohmann::json j = detail::parse_json_line(line, line_no);
    const std::string id = detail::require_string(j, "id", line_no);
    const auto vec = j.find("vec");
    if (vec == j.end() || !vec->is_array() || vec->empty()) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": 'vec' must be a nonempty array");
    }
    EmbeddingVector v;
    v.values.reserve(vec->size());
    for (const auto& x : *vec) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": non-finite or non-numeric component");
      }
      v.values.push_back(x.get<double>());
    }
    if (!store.empty() && v.dim() != store.dim()) {
      throw Error(ErrorKind::dimension_mismatch, "line " + std::to_string(line_no) + ": dim " +
                                                     std::to_string(v.dim()) + " != " + std::to_string(store.dim()));
    }
    if (!store.insert(id, std::move(v))) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": duplicate id '" + id + "'");
    }
  }
  return store;
}

inline VectorStore load_vector_store(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return read_vector_store(in, path);
}

/// Interchange JSONL; doubles are printed in shortest round-trip form.
inline void write_vector_store(std::ostream& out, const VectorStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    nlohmann::ordered_json j = {{"id", store.ids()[i]}, {"vec", store.vectors()[i].values}};
    out << j.dump() << '\n';
  }
}

}  // namespace patchtriage
