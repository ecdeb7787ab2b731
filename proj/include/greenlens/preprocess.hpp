#pragma once

// Duplicate handling and k-core pruning.

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/ingest.hpp"

namespace greenlens {

struct KCoreParams {
  int k = 10;
};

namespace detail {

inline std::uint64_t pair_key(Index u, Index i) { return (static_cast<std::uint64_t>(u) << 32) | i; }

}  // namespace detail

// Collapses repeated (user, item) pairs. Exact duplicate rows count once;
// the remaining distinct rows of a pair are averaged and keep the latest
// timestamp. Pair order follows first appearance.
inline InteractionDataset dedup_average(const InteractionDataset& ds) {
  std::unordered_map<std::uint64_t, std::size_t> slot;
  slot.reserve(ds.size());
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto& x = ds.interactions[r];
    auto [it, inserted] = slot.try_emplace(detail::pair_key(x.user, x.item), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(r);
  }

  std::vector<Interaction> merged;
  merged.reserve(groups.size());
  for (const auto& rows : groups) {
    Interaction out = ds.interactions[rows.front()];
    if (rows.size() > 1) {
      std::vector<Interaction> distinct;
      for (auto r : rows) {
        const auto& x = ds.interactions[r];
        if (std::find(distinct.begin(), distinct.end(), x) == distinct.end()) distinct.push_back(x);
      }
      double sum = 0.0;
      for (const auto& x : distinct) {
        sum += x.rating;
        if (x.timestamp && (!out.timestamp || *x.timestamp > *out.timestamp)) out.timestamp = x.timestamp;
      }
      out.rating = sum / static_cast<double>(distinct.size());
    }
    merged.push_back(out);
  }
  return reindex(ds, merged);
}

// Maximal sub-dataset where every user and item has at least k interactions.
// Peels violators with a work queue until a fixed point is reached.
inline InteractionDataset k_core(const InteractionDataset& ds, KCoreParams params) {
  if (params.k < 1) throw DataError("k-core requires k >= 1");
  const auto k = static_cast<std::size_t>(params.k);
  const std::size_t nu = ds.n_users(), ni = ds.n_items(), ne = ds.size();

  std::vector<std::vector<std::size_t>> by_user(nu), by_item(ni);
  for (std::size_t e = 0; e < ne; ++e) {
    by_user[ds.interactions[e].user].push_back(e);
    by_item[ds.interactions[e].item].push_back(e);
  }
  std::vector<std::size_t> user_deg(nu), item_deg(ni);
  for (std::size_t u = 0; u < nu; ++u) user_deg[u] = by_user[u].size();
  for (std::size_t i = 0; i < ni; ++i) item_deg[i] = by_item[i].size();

  std::vector<char> edge_alive(ne, 1), user_gone(nu, 0), item_gone(ni, 0);
  // Queue entries: node id, with items offset by nu.
  std::vector<std::size_t> queue;
  for (std::size_t u = 0; u < nu; ++u)
    if (user_deg[u] < k) { user_gone[u] = 1; queue.push_back(u); }
  for (std::size_t i = 0; i < ni; ++i)
    if (item_deg[i] < k) { item_gone[i] = 1; queue.push_back(nu + i); }

  while (!queue.empty()) {
    const auto node = queue.back();
    queue.pop_back();
    const bool is_user = node < nu;
    const auto& edges = is_user ? by_user[node] : by_item[node - nu];
    for (auto e : edges) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = 0;
      const auto& x = ds.interactions[e];
      if (is_user) {
        if (--item_deg[x.item] < k && !item_gone[x.item]) {
          item_gone[x.item] = 1;
          queue.push_back(nu + x.item);
        }
      } else {
        if (--user_deg[x.user] < k && !user_gone[x.user]) {
          user_gone[x.user] = 1;
          queue.push_back(x.user);
        }
      }
    }
  }

  std::vector<Interaction> kept;
  for (std::size_t e = 0; e < ne; ++e)
    if (edge_alive[e]) kept.push_back(ds.interactions[e]);
  return reindex(ds, kept);
}

// One filtering pass on the original degrees, without cascading. Kept for
// comparison against the fixed-point result.
inline InteractionDataset k_core_single_pass(const InteractionDataset& ds, KCoreParams params) {
  if (params.k < 1) throw DataError("k-core requires k >= 1");
  std::vector<std::size_t> user_deg(ds.n_users()), item_deg(ds.n_items());
  for (const auto& x : ds.interactions) {
    ++user_deg[x.user];
    ++item_deg[x.item];
  }
  const auto k = static_cast<std::size_t>(params.k);
  std::vector<Interaction> kept;
  for (const auto& x : ds.interactions)
    if (user_deg[x.user] >= k && item_deg[x.item] >= k) kept.push_back(x);
  return reindex(ds, kept);
}

inline InteractionDataset preprocess_pipeline(const InteractionDataset& ds, int k) {
  return k_core(dedup_average(ds), KCoreParams{k});
}

inline nlohmann::json to_json(const StatsRow& s) {
  return {{"n_users", s.n_users},
          {"n_items", s.n_items},
          {"n_interactions", s.n_interactions},
          {"avg_int_per_user", s.avg_int_per_user},
          {"avg_int_per_item", s.avg_int_per_item}};
}

// Before/after document comparing raw and preprocessed statistics. Empty datasets are
// reported as null.
inline nlohmann::json stats_comparison(const InteractionDataset& before, const InteractionDataset& after, int k) {
  auto row = [](const InteractionDataset& d) -> nlohmann::json {
    if (d.empty()) return nullptr;
    return to_json(dataset_stats(d));
  };
  return {{"k", k}, {"before", row(before)}, {"after", row(after)}};
}

}  // namespace greenlens
