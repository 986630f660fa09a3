#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slalom/error.hpp"
#include "slalom/hash.hpp"
#include "slalom/text.hpp"

namespace slalom {

using Embedding = std::vector<double>;

// Maps utterances to unit vectors of a fixed dimension. A text with nothing to
// embed maps to the zero vector, which callers treat as non-embeddable.
// Implementations must tolerate concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;
};

inline bool is_embeddable(const Embedding& v) {
  for (double x : v) {
    if (x != 0.0) return true;
  }
  return false;
}

inline double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

// Signed feature hashing over the tokenizer's bag of words, L2-normalized.
// Deterministic across runs and platforms.
class HashedEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashedEmbeddingProvider(std::size_t dimension = 256,
                                   std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension < 8) {
      throw ValidationError("hashed embedding dimension must be at least 8");
    }
  }

  std::size_t dimension() const override { return dimension_; }

  Embedding embed_one(const std::string& text) const {
    Embedding v(dimension_, 0.0);
    for (const auto& token : tokenize(text)) {
      const std::uint64_t h = mix64(fnv1a(token) ^ seed_);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[h % dimension_] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    return v;
  }

  std::vector<Embedding> embed(std::span<const std::string> texts) const override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

inline HashedEmbeddingProvider hashed_embedding_provider(std::size_t dimension,
                                                         std::uint64_t seed) {
  return HashedEmbeddingProvider(dimension, seed);
}

}  // namespace slalom
