#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tkg/cow.hpp"
#include "tkg/embedding.hpp"
#include "tkg/error.hpp"

namespace tkg {

/// Exact cosine search over unit vectors stored row-major in fixed-size
/// blocks. Blocks are shared between copies of the index and cloned on first
/// write, so snapshots stay cheap.
template <class Key>
class VectorIndex {
 public:
  static constexpr std::size_t kRowsPerBlock = 256;

  explicit VectorIndex(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {}

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return slot_of_.size(); }
  bool contains(const Key& key) const { return slot_of_.count(key) != 0; }

  void upsert(const Key& key, std::span<const float> vec) {
    if (vec.size() != dim_)
      throw Error(ErrorCode::DimensionMismatch,
                  "vector has dimension " + std::to_string(vec.size()) + ", index expects " + std::to_string(dim_));
    std::uint32_t slot;
    if (auto it = slot_of_.find(key); it != slot_of_.end()) {
      slot = it->second;
    } else if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(rows_);
      ++rows_;
      if (slot / kRowsPerBlock >= blocks_.size()) {
        auto block = std::make_shared<Block>();
        block->data.assign(kRowsPerBlock * dim_, 0.0f);
        block->keys.resize(kRowsPerBlock);
        block->live.assign(kRowsPerBlock, 0);
        blocks_.push_back(std::move(block));
      }
    }
    auto& block = cow_mut(blocks_[slot / kRowsPerBlock]);
    const auto row = slot % kRowsPerBlock;
    std::copy(vec.begin(), vec.end(), block.data.begin() + static_cast<std::ptrdiff_t>(row * dim_));
    block.keys[row] = key;
    block.live[row] = 1;
    slot_of_[key] = slot;
  }

  bool remove(const Key& key) {
    auto it = slot_of_.find(key);
    if (it == slot_of_.end()) return false;
    const auto slot = it->second;
    auto& block = cow_mut(blocks_[slot / kRowsPerBlock]);
    block.live[slot % kRowsPerBlock] = 0;
    free_slots_.push_back(slot);
    slot_of_.erase(it);
    return true;
  }

  void clear() { *this = VectorIndex(dim_); }

  std::optional<std::span<const float>> vector_of(const Key& key) const {
    auto it = slot_of_.find(key);
    if (it == slot_of_.end()) return std::nullopt;
    const auto& block = *blocks_[it->second / kRowsPerBlock];
    return std::span<const float>(block.data.data() + (it->second % kRowsPerBlock) * dim_, dim_);
  }

  /// Exact top-k by cosine (vectors are unit norm; the query is normalized
  /// here). Ties resolve by ascending key.
  template <class Keep>
  std::vector<std::pair<Key, double>> top_k(std::span<const float> query, std::size_t k, Keep&& keep) const {
    if (query.size() != dim_)
      throw Error(ErrorCode::DimensionMismatch,
                  "query has dimension " + std::to_string(query.size()) + ", index expects " + std::to_string(dim_));
    std::vector<std::pair<Key, double>> heap;
    if (k == 0 || slot_of_.empty()) return heap;
    const double qn = l2_norm(query);
    const double inv = qn > 0 ? 1.0 / qn : 0.0;
    // heap front is the worst kept candidate
    auto worse = [](const std::pair<Key, double>& a, const std::pair<Key, double>& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    heap.reserve(k + 1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& block = *blocks_[b];
      const std::size_t rows = std::min(kRowsPerBlock, rows_ - b * kRowsPerBlock);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!block.live[r]) continue;
        const Key& key = block.keys[r];
        const double score = dot(query, std::span<const float>(block.data.data() + r * dim_, dim_)) * inv;
        if (heap.size() == k) {
          const auto& top = heap.front();
          if (score < top.second || (score == top.second && !(key < top.first))) continue;
        }
        if (!keep(key)) continue;
        heap.emplace_back(key, score);
        std::push_heap(heap.begin(), heap.end(), worse);
        if (heap.size() > k) {
          std::pop_heap(heap.begin(), heap.end(), worse);
          heap.pop_back();
        }
      }
    }
    std::sort_heap(heap.begin(), heap.end(), worse);
    return heap;
  }

  std::vector<std::pair<Key, double>> top_k(std::span<const float> query, std::size_t k) const {
    return top_k(query, k, [](const Key&) { return true; });
  }

 private:
  struct Block {
    std::vector<float> data;
    std::vector<Key> keys;
    std::vector<std::uint8_t> live;
  };

  std::size_t dim_;
  std::size_t rows_ = 0;
  std::vector<std::shared_ptr<const Block>> blocks_;
  std::unordered_map<Key, std::uint32_t> slot_of_;
  std::vector<std::uint32_t> free_slots_;
};

}  // namespace tkg
