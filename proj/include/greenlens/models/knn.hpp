#pragma once

// Item-item and user-user nearest-neighbour scorers.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "greenlens/models/model.hpp"

namespace greenlens {

struct Neighbor {
  Index index = 0;
  double sim = 0.0;
};

// Neighbours need a similarity above this. Cosines that are zero in exact
// arithmetic come out as +-1e-16 noise; this keeps them out.
inline constexpr double kMinSimilarity = 1e-12;

namespace detail {

// Strongest first; equal similarities in index order.
inline bool stronger(const Neighbor& a, const Neighbor& b) {
  return a.sim > b.sim || (a.sim == b.sim && a.index < b.index);
}

}  // namespace detail

// Cosine similarity between every pair of item columns that share at least
// one user. With `centered`, each column is first shifted by its item mean;
// otherwise stored values are treated as 1.0. Columns whose norm is zero
// have no defined similarity and get an empty list. Lists are sorted by
// item index and never contain the item itself.
inline std::vector<std::vector<Neighbor>> item_similarities(const RatingMatrix& m, bool centered) {
  const std::size_t ni = m.n_items();
  std::vector<double> mean(ni, 0.0), norm(ni, 0.0);
  for (Index i = 0; i < ni; ++i) {
    const auto col = m.col(i);
    if (centered && !col.empty()) {
      double s = 0.0;
      for (const auto& e : col) s += e.value;
      mean[i] = s / static_cast<double>(col.size());
    }
    double sq = 0.0;
    for (const auto& e : col) {
      const double v = centered ? e.value - mean[i] : 1.0;
      sq += v * v;
    }
    norm[i] = std::sqrt(sq);
  }
  auto value = [&](Index item, double raw) { return centered ? raw - mean[item] : 1.0; };

  std::vector<std::vector<Neighbor>> sims(ni);
  std::vector<double> acc(ni, 0.0);
  std::vector<char> touched(ni, 0);
  std::vector<Index> seen;
  for (Index i = 0; i < ni; ++i) {
    if (norm[i] == 0.0) continue;
    seen.clear();
    for (const auto& ue : m.col(i)) {
      const double vi = value(i, ue.value);
      for (const auto& ie : m.row(ue.index)) {
        if (ie.index == i) continue;
        if (!touched[ie.index]) {
          touched[ie.index] = 1;
          seen.push_back(ie.index);
        }
        acc[ie.index] += vi * value(ie.index, ie.value);
      }
    }
    std::sort(seen.begin(), seen.end());
    for (auto j : seen) {
      if (norm[j] > 0.0) sims[i].push_back({j, acc[j] / (norm[i] * norm[j])});
      acc[j] = 0.0;
      touched[j] = 0;
    }
  }
  return sims;
}

// Keeps the `limit` strongest positive similarities per item.
inline std::vector<std::vector<Neighbor>> truncate_neighbors(std::vector<std::vector<Neighbor>> sims,
                                                             std::size_t limit) {
  for (auto& list : sims) {
    std::erase_if(list, [](const Neighbor& n) { return !(n.sim > kMinSimilarity); });
    std::sort(list.begin(), list.end(), detail::stronger);
    if (list.size() > limit) list.resize(limit);
    list.shrink_to_fit();
  }
  return sims;
}

// Rating-based item kNN: weighted average of the user's ratings on the
// nearest rated neighbours of each candidate.
class ItemKnnModel final : public ScoringModel {
 public:
  ItemKnnModel(RatingMatrix train, std::vector<std::vector<Neighbor>> neighbors, std::size_t nnbrs, bool binary,
               std::size_t min_nbrs = 1)
      : train_(std::move(train)), neighbors_(std::move(neighbors)), nnbrs_(nnbrs), min_nbrs_(min_nbrs), binary_(binary) {}

  std::size_t n_users() const override { return train_.n_users(); }
  std::size_t n_items() const override { return train_.n_items(); }
  const std::vector<Neighbor>& neighbors(Index item) const { return neighbors_[item]; }

  void score(Index u, std::span<double> out) const override {
    std::vector<double> rated(n_items(), kUndefined);
    for (const auto& e : train_.row(u)) rated[e.index] = binary_ ? 1.0 : e.value;
    for (Index i = 0; i < n_items(); ++i) {
      double num = 0.0, den = 0.0;
      std::size_t used = 0;
      for (const auto& nb : neighbors_[i]) {
        if (!binary_ && used == nnbrs_) break;
        const double r = rated[nb.index];
        if (std::isnan(r)) continue;
        num += nb.sim * r;
        den += std::abs(nb.sim);
        ++used;
      }
      if (used == 0 || used < min_nbrs_ || den == 0.0) {
        out[i] = kUndefined;
      } else {
        out[i] = binary_ ? num : num / den;
      }
    }
  }

 private:
  RatingMatrix train_;
  std::vector<std::vector<Neighbor>> neighbors_;
  std::size_t nnbrs_;
  std::size_t min_nbrs_;
  bool binary_;
};

// Items with fewer than `min_nbrs` qualifying neighbours are unscoreable.
inline ItemKnnModel fit_item_knn(const RatingMatrix& m, std::size_t nnbrs, std::size_t max_neighbors,
                                 std::size_t min_nbrs = 1) {
  if (nnbrs < 1 || max_neighbors < 1) throw DataError("item kNN needs nnbrs >= 1 and max_neighbors >= 1");
  return ItemKnnModel(m, truncate_neighbors(item_similarities(m, true), max_neighbors), nnbrs, false, min_nbrs);
}

// Binary variant: cosine on the binarized matrix, score = sum of
// similarities to the user's items found in the candidate's list.
inline ItemKnnModel fit_item_knn_binary(const RatingMatrix& m, std::size_t max_neighbors) {
  if (max_neighbors < 1) throw DataError("item kNN needs max_neighbors >= 1");
  return ItemKnnModel(m, truncate_neighbors(item_similarities(m, false), max_neighbors), max_neighbors, true);
}

// Mean-centred user-user kNN. Similarities to the query user are computed
// at scoring time.
class UserKnnModel final : public ScoringModel {
 public:
  UserKnnModel(RatingMatrix train, std::size_t nnbrs, std::size_t min_nbrs = 1)
      : train_(std::move(train)), nnbrs_(nnbrs), min_nbrs_(min_nbrs) {
    const std::size_t nu = train_.n_users();
    mean_.assign(nu, 0.0);
    norm_.assign(nu, 0.0);
    for (Index u = 0; u < nu; ++u) {
      const auto row = train_.row(u);
      if (row.empty()) continue;
      double s = 0.0;
      for (const auto& e : row) s += e.value;
      mean_[u] = s / static_cast<double>(row.size());
      double sq = 0.0;
      for (const auto& e : row) sq += (e.value - mean_[u]) * (e.value - mean_[u]);
      norm_[u] = std::sqrt(sq);
    }
  }

  std::size_t n_users() const override { return train_.n_users(); }
  std::size_t n_items() const override { return train_.n_items(); }
  double user_mean(Index u) const { return mean_[u]; }

  // Cosine of the centred vectors of `u` and every other user; NaN where
  // undefined (no co-rated item or zero norm).
  std::vector<double> similarities(Index u) const {
    std::vector<double> sim(n_users(), kUndefined);
    if (norm_[u] == 0.0) return sim;
    std::vector<double> acc(n_users(), 0.0);
    std::vector<char> corated(n_users(), 0);
    for (const auto& ie : train_.row(u)) {
      const double cu = ie.value - mean_[u];
      for (const auto& ve : train_.col(ie.index)) {
        acc[ve.index] += cu * (ve.value - mean_[ve.index]);
        corated[ve.index] = 1;
      }
    }
    for (Index v = 0; v < n_users(); ++v)
      if (v != u && corated[v] && norm_[v] > 0.0) sim[v] = acc[v] / (norm_[u] * norm_[v]);
    return sim;
  }

  void score(Index u, std::span<double> out) const override {
    const auto sim = similarities(u);
    struct Candidate {
      Neighbor nb;
      double rating;
    };
    auto stronger = [](const Candidate& a, const Candidate& b) { return detail::stronger(a.nb, b.nb); };
    std::vector<Candidate> cand;
    for (Index i = 0; i < n_items(); ++i) {
      cand.clear();
      for (const auto& ve : train_.col(i)) {
        const double s = sim[ve.index];
        if (s > kMinSimilarity) cand.push_back({{ve.index, s}, ve.value});
      }
      if (cand.empty() || cand.size() < min_nbrs_) {
        out[i] = kUndefined;
        continue;
      }
      if (cand.size() > nnbrs_) {
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(nnbrs_), cand.end(), stronger);
        cand.resize(nnbrs_);
      }
      std::sort(cand.begin(), cand.end(), stronger);
      double num = 0.0, den = 0.0;
      for (const auto& c : cand) {
        num += c.nb.sim * (c.rating - mean_[c.nb.index]);
        den += std::abs(c.nb.sim);
      }
      out[i] = mean_[u] + num / den;
    }
  }

 private:
  RatingMatrix train_;
  std::size_t nnbrs_;
  std::size_t min_nbrs_;
  std::vector<double> mean_, norm_;
};

inline UserKnnModel fit_user_knn(const RatingMatrix& m, std::size_t nnbrs, std::size_t min_nbrs = 1) {
  if (nnbrs < 1) throw DataError("user kNN needs nnbrs >= 1");
  return UserKnnModel(m, nnbrs, min_nbrs);
}

}  // namespace greenlens
