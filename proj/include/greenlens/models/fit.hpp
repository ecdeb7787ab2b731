#pragma once

#include <memory>

#include "greenlens/models/baseline.hpp"
#include "greenlens/models/factorization.hpp"
#include "greenlens/models/knn.hpp"
#include "greenlens/models/model.hpp"

namespace greenlens {

namespace detail {

template <class T>
FittedModel wrap(const AlgorithmSpec& spec, const RatingMatrix& m, T&& state) {
  return FittedModel{spec, training_fingerprint(m), std::make_shared<const std::decay_t<T>>(std::forward<T>(state))};
}

inline void expect_kind(const AlgorithmSpec& spec, std::initializer_list<AlgorithmKind> kinds, const char* family) {
  for (auto k : kinds)
    if (spec.kind == k) return;
  throw DataError(std::string(to_string(spec.kind)) + " is not a " + family + " algorithm");
}

}  // namespace detail

inline FittedModel fit_baseline(const AlgorithmSpec& spec, const RatingMatrix& m, std::uint64_t seed) {
  using K = AlgorithmKind;
  detail::expect_kind(spec, {K::random, K::popularity, K::popularity_binary, K::bias}, "baseline");
  switch (spec.kind) {
    case K::random: return detail::wrap(spec, m, fit_random(m, seed));
    case K::bias: return detail::wrap(spec, m, fit_bias(m, spec.get("damping")));
    default: return detail::wrap(spec, m, fit_popularity(m));
  }
}

inline FittedModel fit_neighborhood(const AlgorithmSpec& spec, const RatingMatrix& m) {
  using K = AlgorithmKind;
  detail::expect_kind(spec, {K::user_knn, K::item_knn, K::item_knn_binary}, "neighborhood");
  switch (spec.kind) {
    case K::user_knn: return detail::wrap(spec, m, fit_user_knn(m, spec.count("nnbrs"), spec.count("min_nbrs")));
    case K::item_knn:
      return detail::wrap(spec, m, fit_item_knn(m, spec.count("nnbrs"), spec.count("max_neighbors"), spec.count("min_nbrs")));
    default: return detail::wrap(spec, m, fit_item_knn_binary(m, spec.count("max_neighbors")));
  }
}

inline FittedModel fit_factorization(const AlgorithmSpec& spec, const RatingMatrix& m, std::uint64_t seed) {
  using K = AlgorithmKind;
  detail::expect_kind(spec, {K::funk_svd, K::biased_mf, K::svd, K::nmf}, "factorization");
  switch (spec.kind) {
    case K::funk_svd: {
      FunkSvdParams p{spec.count("factors"), spec.get("learning_rate"), spec.get("regularization"),
                      spec.count("epochs"), spec.get("init")};
      return detail::wrap(spec, m, fit_funk_svd(m, p, seed));
    }
    case K::biased_mf: {
      BiasedMfParams p{spec.count("factors"), spec.get("learning_rate"), spec.get("regularization"),
                       spec.count("epochs"), spec.get("damping")};
      return detail::wrap(spec, m, fit_biased_mf(m, p, seed));
    }
    case K::svd: {
      SvdParams p{spec.count("factors"), spec.count("power_iterations"), spec.count("oversample"),
                  spec.get("binarize") != 0.0};
      return detail::wrap(spec, m, fit_svd(m, p, seed));
    }
    default: {
      NmfParams p{spec.count("factors"), spec.count("iterations"), spec.get("binarize") != 0.0};
      return detail::wrap(spec, m, fit_nmf(m, p, seed));
    }
  }
}

inline FittedModel fit(const AlgorithmSpec& spec, const RatingMatrix& m, std::uint64_t seed) {
  using K = AlgorithmKind;
  switch (spec.kind) {
    case K::random:
    case K::popularity:
    case K::popularity_binary:
    case K::bias: return fit_baseline(spec, m, seed);
    case K::user_knn:
    case K::item_knn:
    case K::item_knn_binary: return fit_neighborhood(spec, m);
    default: return fit_factorization(spec, m, seed);
  }
}

}  // namespace greenlens
