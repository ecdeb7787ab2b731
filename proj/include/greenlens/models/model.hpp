#pragma once

// Uniform fit/recommend contract shared by every algorithm.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "greenlens/error.hpp"
#include "greenlens/matrix.hpp"
#include "greenlens/rng.hpp"
#include "greenlens/text.hpp"

namespace greenlens {

enum class AlgorithmKind {
  random,
  popularity,
  popularity_binary,
  bias,
  user_knn,
  item_knn,
  item_knn_binary,
  funk_svd,
  biased_mf,
  svd,
  nmf,
};

inline constexpr std::array kAllAlgorithms = {
    AlgorithmKind::random,   AlgorithmKind::popularity,      AlgorithmKind::popularity_binary,
    AlgorithmKind::bias,     AlgorithmKind::user_knn,        AlgorithmKind::item_knn,
    AlgorithmKind::item_knn_binary, AlgorithmKind::funk_svd, AlgorithmKind::biased_mf,
    AlgorithmKind::svd,      AlgorithmKind::nmf,
};

inline std::string_view to_string(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::random: return "random";
    case AlgorithmKind::popularity: return "popularity";
    case AlgorithmKind::popularity_binary: return "popularity_binary";
    case AlgorithmKind::bias: return "bias";
    case AlgorithmKind::user_knn: return "user_knn";
    case AlgorithmKind::item_knn: return "item_knn";
    case AlgorithmKind::item_knn_binary: return "item_knn_binary";
    case AlgorithmKind::funk_svd: return "funk_svd";
    case AlgorithmKind::biased_mf: return "biased_mf";
    case AlgorithmKind::svd: return "svd";
    case AlgorithmKind::nmf: return "nmf";
  }
  return "?";
}

inline AlgorithmKind parse_algorithm(std::string_view name) {
  for (auto k : kAllAlgorithms)
    if (to_string(k) == name) return k;
  throw DataError("unknown algorithm '" + std::string(name) + "'");
}

using Params = std::map<std::string, double>;

namespace detail {

enum class ParamRule { positive, non_negative, count, count_or_zero, flag, any };

struct ParamDef {
  std::string_view name;
  double fallback;
  ParamRule rule;
};

inline std::span<const ParamDef> param_defs(AlgorithmKind kind) {
  static constexpr ParamDef none[] = {{"", 0, ParamRule::any}};
  static constexpr ParamDef bias[] = {{"damping", 5.0, ParamRule::non_negative}};
  static constexpr ParamDef user_knn[] = {{"nnbrs", 20, ParamRule::count}, {"min_nbrs", 1, ParamRule::count}};
  static constexpr ParamDef item_knn[] = {{"nnbrs", 20, ParamRule::count},
                                          {"max_neighbors", 100, ParamRule::count},
                                          {"min_nbrs", 1, ParamRule::count}};
  static constexpr ParamDef item_knn_binary[] = {{"max_neighbors", 100, ParamRule::count}};
  static constexpr ParamDef funk_svd[] = {{"factors", 50, ParamRule::count},
                                          {"learning_rate", 0.005, ParamRule::positive},
                                          {"regularization", 0.02, ParamRule::non_negative},
                                          {"epochs", 10, ParamRule::count},
                                          {"init", 0.1, ParamRule::any}};
  static constexpr ParamDef biased_mf[] = {{"factors", 50, ParamRule::count},
                                           {"learning_rate", 0.005, ParamRule::positive},
                                           {"regularization", 0.02, ParamRule::non_negative},
                                           {"epochs", 20, ParamRule::count},
                                           {"damping", 5.0, ParamRule::non_negative}};
  static constexpr ParamDef svd[] = {{"factors", 100, ParamRule::count},
                                     {"power_iterations", 2, ParamRule::count_or_zero},
                                     {"oversample", 10, ParamRule::count_or_zero},
                                     {"binarize", 1, ParamRule::flag}};
  static constexpr ParamDef nmf[] = {{"factors", 50, ParamRule::count},
                                     {"iterations", 100, ParamRule::count},
                                     {"binarize", 1, ParamRule::flag}};
  switch (kind) {
    case AlgorithmKind::bias: return bias;
    case AlgorithmKind::user_knn: return user_knn;
    case AlgorithmKind::item_knn: return item_knn;
    case AlgorithmKind::item_knn_binary: return item_knn_binary;
    case AlgorithmKind::funk_svd: return funk_svd;
    case AlgorithmKind::biased_mf: return biased_mf;
    case AlgorithmKind::svd: return svd;
    case AlgorithmKind::nmf: return nmf;
    default: return std::span(none, 0);
  }
}

}  // namespace detail

// Algorithm kind plus named hyperparameters. Missing hyperparameters take
// the documented defaults; randomness comes from the seed passed to fit.
struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::popularity;
  Params params;

  AlgorithmSpec() = default;
  AlgorithmSpec(AlgorithmKind k, Params p = {}) : kind(k), params(std::move(p)) {
    validate();
    for (const auto& def : detail::param_defs(kind)) params.try_emplace(std::string(def.name), def.fallback);
  }

  double get(std::string_view name) const {
    auto it = params.find(std::string(name));
    if (it == params.end())
      throw DataError("algorithm " + std::string(to_string(kind)) + " has no parameter '" + std::string(name) + "'");
    return it->second;
  }
  std::size_t count(std::string_view name) const { return static_cast<std::size_t>(get(name)); }

  // Canonical text form; the fingerprint hashes it.
  std::string canonical() const {
    std::string s(to_string(kind));
    for (const auto& [k, v] : params) s += ";" + k + "=" + text::shortest(v);
    return s;
  }
  std::string fingerprint() const { return text::hex64(fnv1a(canonical())); }

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;

 private:
  void validate() const {
    const auto defs = detail::param_defs(kind);
    for (const auto& [name, value] : params) {
      auto it = std::find_if(defs.begin(), defs.end(), [&](const auto& d) { return d.name == name; });
      if (it == defs.end())
        throw DataError("unknown parameter '" + name + "' for algorithm " + std::string(to_string(kind)));
      using detail::ParamRule;
      const bool integral = std::isfinite(value) && value == std::floor(value);
      bool ok = std::isfinite(value);
      switch (it->rule) {
        case ParamRule::positive: ok = ok && value > 0; break;
        case ParamRule::non_negative: ok = ok && value >= 0; break;
        case ParamRule::count: ok = integral && value >= 1; break;
        case ParamRule::count_or_zero: ok = integral && value >= 0; break;
        case ParamRule::flag: ok = value == 0 || value == 1; break;
        case ParamRule::any: break;
      }
      if (!ok)
        throw DataError("parameter '" + name + "' = " + text::shortest(value) + " out of range for algorithm " +
                        std::string(to_string(kind)));
    }
  }
};

// Fitted state of one algorithm. score() fills `out` (length n_items) with
// the score of every item for `user`; NaN marks an item the model cannot
// score. Implementations are immutable after construction.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;
  virtual std::size_t n_users() const = 0;
  virtual std::size_t n_items() const = 0;
  virtual void score(Index user, std::span<double> out) const = 0;
};

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline std::uint64_t training_fingerprint(const RatingMatrix& m) {
  Fnv1a h;
  for (Index u = 0; u < m.n_users(); ++u) {
    for (const auto& e : m.row(u)) {
      const double triple[3] = {static_cast<double>(u), static_cast<double>(e.index), e.value};
      h.update(std::string_view(reinterpret_cast<const char*>(triple), sizeof triple));
    }
  }
  return h.digest();
}

struct FittedModel {
  AlgorithmSpec spec;
  std::uint64_t training = 0;
  std::shared_ptr<const ScoringModel> state;

  template <class T>
  const T& as() const {
    auto* p = dynamic_cast<const T*>(state.get());
    if (!p) throw RuntimeError("fitted model has a different state type");
    return *p;
  }
};

struct RankedList {
  Index user = 0;
  std::vector<std::pair<Index, double>> items;  // (item, score), best first

  std::vector<Index> item_ids() const {
    std::vector<Index> out;
    out.reserve(items.size());
    for (const auto& p : items) out.push_back(p.first);
    return out;
  }
};

// Top-k by descending score, ties to the lower item index. Items in
// train_items or excluded, and items the model cannot score, never appear.
inline RankedList rank_scores(Index user, std::span<double> scores, std::span<const Index> train_items,
                              std::span<const Index> excluded, std::size_t k) {
  for (auto i : train_items)
    if (i < scores.size()) scores[i] = kUndefined;
  for (auto i : excluded)
    if (i < scores.size()) scores[i] = kUndefined;
  RankedList out;
  out.user = user;
  for (Index i = 0; i < scores.size(); ++i)
    if (!std::isnan(scores[i])) out.items.emplace_back(i, scores[i]);
  auto better = [](const auto& a, const auto& b) { return a.second > b.second || (a.second == b.second && a.first < b.first); };
  const auto top = std::min(k, out.items.size());
  std::partial_sort(out.items.begin(), out.items.begin() + static_cast<std::ptrdiff_t>(top), out.items.end(), better);
  out.items.resize(top);
  return out;
}

inline RankedList recommend(const FittedModel& model, Index user, std::span<const Index> train_items,
                            std::span<const Index> excluded, std::size_t k) {
  if (!model.state) throw RuntimeError("model has not been fitted");
  if (user >= model.state->n_users()) throw DataError("unknown user index " + std::to_string(user));
  std::vector<double> scores(model.state->n_items());
  model.state->score(user, scores);
  return rank_scores(user, scores, train_items, excluded, k);
}

}  // namespace greenlens
