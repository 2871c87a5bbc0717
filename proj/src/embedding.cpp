#include "tkg/embedding.hpp"

#include <cmath>

#include "tkg/ids.hpp"
#include "tkg/text.hpp"

namespace tkg {

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  const float* x = a.data();
  const float* y = b.data();
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(x[i]) * y[i];
    s1 += static_cast<double>(x[i + 1]) * y[i + 1];
    s2 += static_cast<double>(x[i + 2]) * y[i + 2];
    s3 += static_cast<double>(x[i + 3]) * y[i + 3];
  }
  for (; i < n; ++i) s0 += static_cast<double>(x[i]) * y[i];
  return (s0 + s1) + (s2 + s3);
}

double l2_norm(std::span<const float> v) noexcept { return std::sqrt(dot(v, v)); }

bool normalize(std::vector<float>& v) noexcept {
  const double n = l2_norm(v);
  if (n == 0.0) return false;
  for (auto& x : v) x = static_cast<float>(x / n);
  return true;
}

double cosine(std::span<const float> a, std::span<const float> b) noexcept {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<std::vector<float>> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::vector<float> HashingEmbedder::embed(std::string_view text) {
  std::vector<double> acc(dim_, 0.0);
  auto add = [&](std::string_view feature, double weight) {
    const std::uint64_t h = fnv1a64(feature);
    const std::size_t bucket = static_cast<std::size_t>(h % dim_);
    acc[bucket] += (h >> 63) ? -weight : weight;
  };
  for (const auto& tok : tokenize(text)) {
    add("w:" + tok, 1.0);
    const std::string marked = "^" + tok + "$";
    if (marked.size() >= 3)
      for (std::size_t i = 0; i + 3 <= marked.size(); ++i) add("t:" + marked.substr(i, 3), 0.35);
  }
  std::vector<float> out(dim_);
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  if (norm == 0.0) {
    out[static_cast<std::size_t>(fnv1a64(text) % dim_)] = 1.0f;
    return out;
  }
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
  // re-normalize the float rounding away
  normalize(out);
  return out;
}

}  // namespace tkg
