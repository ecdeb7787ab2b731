#pragma once

// nDCG@k with binary relevance, per user and over a test population.

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/models/model.hpp"
#include "greenlens/split.hpp"

namespace greenlens {

// Relevance is membership in `relevant`. Positions are 1-based with
// discount log2(p + 1); the ideal DCG is truncated at min(k, |relevant|).
inline double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k) {
  if (k < 1) throw DataError("nDCG cutoff must be >= 1");
  if (relevant.empty()) throw DataError("nDCG is undefined for an empty relevant set");
  std::vector<Index> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());

  double dcg = 0.0;
  const auto depth = std::min(k, ranked.size());
  for (std::size_t p = 0; p < depth; ++p)
    if (std::binary_search(rel.begin(), rel.end(), ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  const auto ideal = std::min(k, rel.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

struct MetricResult {
  std::map<Index, double> per_user;
  double mean = 0.0;
  std::size_t n_evaluated = 0;
};

inline nlohmann::json to_json(const MetricResult& r, bool with_per_user = false) {
  nlohmann::json j = {{"mean", r.mean}, {"n_evaluated", r.n_evaluated}};
  if (with_per_user) {
    nlohmann::json pu = nlohmann::json::object();
    for (const auto& [u, v] : r.per_user) pu[std::to_string(u)] = v;
    j["per_user"] = pu;
  }
  return j;
}

// Items grouped by user index.
using UserItems = std::vector<std::vector<Index>>;

inline UserItems group_items(std::span<const Interaction> rows, std::size_t n_users) {
  UserItems out(n_users);
  for (const auto& x : rows) out.at(x.user).push_back(x.item);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

// Ranks, for every user with relevant items, all items outside
// train ∪ excluded and averages nDCG@k. Users are visited in index order so
// the sum is reproducible.
inline MetricResult evaluate_ranking(const FittedModel& model, const UserItems& train, const UserItems& excluded,
                                     const UserItems& relevant, std::size_t k) {
  MetricResult out;
  double sum = 0.0;
  for (Index u = 0; u < relevant.size(); ++u) {
    if (relevant[u].empty()) continue;
    const auto ranked = recommend(model, u, train[u], excluded[u], k);
    const double v = ndcg_at_k(ranked.item_ids(), relevant[u], k);
    out.per_user.emplace(u, v);
    sum += v;
    ++out.n_evaluated;
  }
  out.mean = out.n_evaluated ? sum / static_cast<double>(out.n_evaluated) : 0.0;
  return out;
}

// Test-set evaluation of a model fitted on `downsampled_train`. Candidates
// exclude the user's downsampled training items and validation items only;
// training items dropped by downsampling stay in the candidate pool.
inline MetricResult evaluate_model(const FittedModel& model, const SplitBundle& bundle,
                                   std::span<const Interaction> downsampled_train, std::size_t k) {
  return evaluate_ranking(model, group_items(downsampled_train, bundle.n_users),
                          group_items(bundle.validation, bundle.n_users), group_items(bundle.test, bundle.n_users), k);
}

// Validation-set evaluation used for tuning: candidates are all items the
// user did not train on.
inline MetricResult evaluate_validation(const FittedModel& model, const SplitBundle& bundle,
                                        std::span<const Interaction> train, std::size_t k) {
  return evaluate_ranking(model, group_items(train, bundle.n_users), UserItems(bundle.n_users),
                          group_items(bundle.validation, bundle.n_users), k);
}

}  // namespace greenlens
