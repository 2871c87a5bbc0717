#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tkg {

inline constexpr std::size_t kDefaultEmbeddingDim = 1024;

/// Dot product accumulated in double with four independent lanes.
double dot(std::span<const float> a, std::span<const float> b) noexcept;

double l2_norm(std::span<const float> v) noexcept;

/// Scales to unit length. Zero vectors are left untouched; returns false.
bool normalize(std::vector<float>& v) noexcept;

/// Cosine similarity; 0 when either side has zero norm.
double cosine(std::span<const float> a, std::span<const float> b) noexcept;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  /// Returns a unit-norm vector of size dimension().
  virtual std::vector<float> embed(std::string_view text) = 0;
  virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts);
};

/// Deterministic feature-hashing embedder. Word tokens and boundary-marked
/// character trigrams are hashed into signed buckets, so texts sharing words
/// or word stems land close together. Stands in for a learned model in tests
/// and benchmarks.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {}

  std::size_t dimension() const override { return dim_; }
  std::vector<float> embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

}  // namespace tkg
