#pragma once

// Sparse user-item matrix with both row (per-user) and column (per-item)
// views over the same triples.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "greenlens/error.hpp"
#include "greenlens/ingest.hpp"

namespace greenlens {

struct Entry {
  Index index = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

class RatingMatrix {
 public:
  RatingMatrix() = default;

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t nnz() const { return rows_.size(); }
  bool binarized() const { return binarized_; }

  std::span<const Entry> row(Index u) const {
    return std::span(rows_).subspan(row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]);
  }
  std::span<const Entry> col(Index i) const {
    return std::span(cols_).subspan(col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]);
  }

  friend RatingMatrix build_matrix(std::span<const Interaction>, std::size_t, std::size_t, bool);

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  bool binarized_ = false;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Entry> rows_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<Entry> cols_;
};

inline RatingMatrix build_matrix(std::span<const Interaction> train, std::size_t n_users, std::size_t n_items,
                                 bool binarize = false) {
  RatingMatrix m;
  m.n_users_ = n_users;
  m.n_items_ = n_items;
  m.binarized_ = binarize;

  std::vector<std::size_t> row_count(n_users + 1, 0), col_count(n_items + 1, 0);
  for (const auto& x : train) {
    if (x.user >= n_users || x.item >= n_items)
      throw DataError("interaction (" + std::to_string(x.user) + ", " + std::to_string(x.item) +
                      ") outside matrix dimensions " + std::to_string(n_users) + "x" + std::to_string(n_items));
    ++row_count[x.user + 1];
    ++col_count[x.item + 1];
  }
  for (std::size_t u = 0; u < n_users; ++u) row_count[u + 1] += row_count[u];
  for (std::size_t i = 0; i < n_items; ++i) col_count[i + 1] += col_count[i];
  m.row_ptr_ = row_count;
  m.col_ptr_ = col_count;
  m.rows_.resize(train.size());
  m.cols_.resize(train.size());
  for (const auto& x : train) {
    const double v = binarize ? 1.0 : x.rating;
    m.rows_[row_count[x.user]++] = {x.item, v};
    m.cols_[col_count[x.item]++] = {x.user, v};
  }
  auto by_index = [](const Entry& a, const Entry& b) { return a.index < b.index; };
  auto sort_segments = [&](std::vector<Entry>& entries, const std::vector<std::size_t>& ptr, const char* what) {
    for (std::size_t s = 0; s + 1 < ptr.size(); ++s) {
      auto first = entries.begin() + static_cast<std::ptrdiff_t>(ptr[s]);
      auto last = entries.begin() + static_cast<std::ptrdiff_t>(ptr[s + 1]);
      std::sort(first, last, by_index);
      if (std::adjacent_find(first, last, [](const Entry& a, const Entry& b) { return a.index == b.index; }) != last)
        throw DataError(std::string("duplicate entry in matrix ") + what + " " + std::to_string(s));
    }
  };
  sort_segments(m.rows_, m.row_ptr_, "row");
  sort_segments(m.cols_, m.col_ptr_, "column");
  return m;
}

}  // namespace greenlens
