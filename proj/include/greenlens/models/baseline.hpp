#pragma once

// Random, popularity and damped-bias baselines.

#include <span>
#include <vector>

#include "greenlens/models/model.hpp"

namespace greenlens {

// Scores are pure functions of (seed, user, item).
class RandomModel final : public ScoringModel {
 public:
  RandomModel(std::size_t n_users, std::size_t n_items, std::uint64_t seed)
      : n_users_(n_users), n_items_(n_items), seed_(seed) {}

  std::size_t n_users() const override { return n_users_; }
  std::size_t n_items() const override { return n_items_; }
  std::uint64_t seed() const { return seed_; }

  double score_one(Index u, Index i) const {
    return bits_to_unit(mix_seed(seed_, (static_cast<std::uint64_t>(u) << 32) | i));
  }
  void score(Index u, std::span<double> out) const override {
    for (Index i = 0; i < out.size(); ++i) out[i] = score_one(u, i);
  }

 private:
  std::size_t n_users_, n_items_;
  std::uint64_t seed_;
};

class PopularityModel final : public ScoringModel {
 public:
  PopularityModel(std::size_t n_users, std::vector<double> counts) : n_users_(n_users), counts_(std::move(counts)) {}

  std::size_t n_users() const override { return n_users_; }
  std::size_t n_items() const override { return counts_.size(); }
  const std::vector<double>& counts() const { return counts_; }

  void score(Index, std::span<double> out) const override { std::copy(counts_.begin(), counts_.end(), out.begin()); }

 private:
  std::size_t n_users_;
  std::vector<double> counts_;
};

// score(u, i) = mu + b_i + b_u with damped item then user offsets.
class BiasModel final : public ScoringModel {
 public:
  BiasModel(double mu, std::vector<double> user_bias, std::vector<double> item_bias)
      : mu_(mu), user_bias_(std::move(user_bias)), item_bias_(std::move(item_bias)) {}

  std::size_t n_users() const override { return user_bias_.size(); }
  std::size_t n_items() const override { return item_bias_.size(); }
  double global_mean() const { return mu_; }
  const std::vector<double>& user_bias() const { return user_bias_; }
  const std::vector<double>& item_bias() const { return item_bias_; }

  void score(Index u, std::span<double> out) const override {
    for (Index i = 0; i < out.size(); ++i) out[i] = mu_ + item_bias_[i] + user_bias_[u];
  }

 private:
  double mu_;
  std::vector<double> user_bias_, item_bias_;
};

inline RandomModel fit_random(const RatingMatrix& m, std::uint64_t seed) {
  return RandomModel(m.n_users(), m.n_items(), seed);
}

// Interaction count per item. On a matrix with one entry per (user, item)
// the raw and binarized counts coincide.
inline PopularityModel fit_popularity(const RatingMatrix& m) {
  std::vector<double> counts(m.n_items());
  for (Index i = 0; i < m.n_items(); ++i) counts[i] = static_cast<double>(m.col(i).size());
  return PopularityModel(m.n_users(), std::move(counts));
}

inline BiasModel fit_bias(const RatingMatrix& m, double damping) {
  if (m.nnz() == 0) throw DataError("bias model needs at least one training rating");
  double sum = 0.0;
  for (Index u = 0; u < m.n_users(); ++u)
    for (const auto& e : m.row(u)) sum += e.value;
  const double mu = sum / static_cast<double>(m.nnz());

  std::vector<double> item_bias(m.n_items(), 0.0), user_bias(m.n_users(), 0.0);
  for (Index i = 0; i < m.n_items(); ++i) {
    const auto col = m.col(i);
    if (col.empty()) continue;
    double acc = 0.0;
    for (const auto& e : col) acc += e.value - mu;
    item_bias[i] = acc / (damping + static_cast<double>(col.size()));
  }
  for (Index u = 0; u < m.n_users(); ++u) {
    const auto row = m.row(u);
    if (row.empty()) continue;
    double acc = 0.0;
    for (const auto& e : row) acc += e.value - mu - item_bias[e.index];
    user_bias[u] = acc / (damping + static_cast<double>(row.size()));
  }
  return BiasModel(mu, std::move(user_bias), std::move(item_bias));
}

}  // namespace greenlens
