#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tkg/cow.hpp"
#include "tkg/text.hpp"

namespace tkg {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over an in-memory inverted index. Documents get increasing
/// internal numbers, so postings stay sorted by appending; updates retire the
/// old number and append a new one.
template <class Key>
class InvertedIndex {
 public:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };
  using PostingList = std::vector<Posting>;

  void upsert(const Key& key, std::string_view text) {
    remove(key);
    auto tokens = tokenize(text);
    std::vector<std::pair<std::string, std::uint32_t>> terms;
    {
      std::unordered_map<std::string, std::uint32_t> tf;
      for (auto& t : tokens) {
        auto [it, inserted] = tf.try_emplace(t, 0);
        if (inserted) terms.emplace_back(t, 0);
        ++it->second;
      }
      for (auto& [term, count] : terms) count = tf[term];
    }
    const auto doc_no = static_cast<std::uint32_t>(docs_.size());
    for (const auto& [term, count] : terms) {
      auto& list = postings_[term];
      cow_mut(list).push_back(Posting{doc_no, count});
    }
    docs_.push_back(std::make_shared<const Doc>(Doc{key, static_cast<std::uint32_t>(tokens.size()), std::move(terms)}));
    doc_of_[key] = doc_no;
    total_length_ += tokens.size();
    ++live_docs_;
    maybe_compact();
  }

  bool remove(const Key& key) {
    auto it = doc_of_.find(key);
    if (it == doc_of_.end()) return false;
    const auto doc_no = it->second;
    const auto& doc = *docs_[doc_no];
    for (const auto& [term, count] : doc.terms) {
      auto pit = postings_.find(term);
      if (pit == postings_.end()) continue;
      auto& list = cow_mut(pit->second);
      auto pos = std::lower_bound(list.begin(), list.end(), doc_no,
                                  [](const Posting& p, std::uint32_t d) { return p.doc < d; });
      if (pos != list.end() && pos->doc == doc_no) list.erase(pos);
      if (list.empty()) postings_.erase(pit);
    }
    total_length_ -= doc.length;
    --live_docs_;
    docs_[doc_no].reset();
    doc_of_.erase(it);
    return true;
  }

  void clear() { *this = InvertedIndex{}; }

  bool contains(const Key& key) const { return doc_of_.count(key) != 0; }
  std::size_t doc_count() const noexcept { return live_docs_; }
  double avg_doc_length() const noexcept {
    return live_docs_ == 0 ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(live_docs_);
  }
  std::size_t document_frequency(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? 0 : it->second->size();
  }
  const PostingList* postings(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? nullptr : it->second.get();
  }

  /// Ranked by descending score, ties by ascending key. Duplicate query
  /// tokens count once.
  template <class Keep>
  std::vector<std::pair<Key, double>> search(std::string_view query, std::size_t limit, Keep&& keep,
                                             Bm25Params params = {}) const {
    std::vector<std::pair<Key, double>> out;
    if (limit == 0 || live_docs_ == 0) return out;
    auto tokens = tokenize(query);
    std::unordered_set<std::string> seen;
    std::unordered_map<std::uint32_t, double> acc;
    const double n = static_cast<double>(live_docs_);
    const double avgdl = avg_doc_length();
    for (const auto& tok : tokens) {
      if (!seen.insert(tok).second) continue;
      auto it = postings_.find(tok);
      if (it == postings_.end()) continue;
      const auto& list = *it->second;
      const double df = static_cast<double>(list.size());
      const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
      for (const auto& p : list) {
        const double tf = p.tf;
        const double len = docs_[p.doc]->length;
        const double norm = params.k1 * (1.0 - params.b + params.b * len / avgdl);
        acc[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
      }
    }
    out.reserve(acc.size());
    for (const auto& [doc, score] : acc) {
      const Key& key = docs_[doc]->key;
      if (keep(key)) out.emplace_back(key, score);
    }
    auto better = [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    if (out.size() > limit) {
      std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(), better);
      out.resize(limit);
    } else {
      std::sort(out.begin(), out.end(), better);
    }
    return out;
  }

  std::vector<std::pair<Key, double>> search(std::string_view query, std::size_t limit,
                                             Bm25Params params = {}) const {
    return search(query, limit, [](const Key&) { return true; }, params);
  }

 private:
  struct Doc {
    Key key;
    std::uint32_t length;
    std::vector<std::pair<std::string, std::uint32_t>> terms;
  };

  void maybe_compact() {
    const auto retired = docs_.size() - live_docs_;
    if (retired < 4096 || retired < live_docs_) return;
    std::vector<std::shared_ptr<const Doc>> live;
    live.reserve(live_docs_);
    for (auto& d : docs_)
      if (d) live.push_back(std::move(d));
    docs_.clear();
    postings_.clear();
    doc_of_.clear();
    for (std::uint32_t i = 0; i < live.size(); ++i) {
      for (const auto& [term, count] : live[i]->terms) cow_mut(postings_[term]).push_back(Posting{i, count});
      doc_of_[live[i]->key] = i;
    }
    docs_ = std::move(live);
  }

  std::unordered_map<std::string, std::shared_ptr<const PostingList>> postings_;
  std::vector<std::shared_ptr<const Doc>> docs_;
  std::unordered_map<Key, std::uint32_t> doc_of_;
  std::uint64_t total_length_ = 0;
  std::size_t live_docs_ = 0;
};

}  // namespace tkg
