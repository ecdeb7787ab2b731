#pragma once

// Latent-factor models: FunkSVD, biased MF, randomized truncated SVD and
// multiplicative-update NMF.

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "greenlens/models/baseline.hpp"
#include "greenlens/models/model.hpp"

namespace greenlens {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline SparseMatrix to_sparse(const RatingMatrix& m, bool binary) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(m.nnz());
  for (Index u = 0; u < m.n_users(); ++u)
    for (const auto& e : m.row(u)) triplets.emplace_back(u, e.index, binary ? 1.0 : e.value);
  SparseMatrix x(static_cast<Eigen::Index>(m.n_users()), static_cast<Eigen::Index>(m.n_items()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

// Scores U_u . V_i (+ optional global, user and item offsets).
class FactorModel final : public ScoringModel {
 public:
  FactorModel(DenseMatrix user_factors, DenseMatrix item_factors, double offset = 0.0,
              std::vector<double> user_bias = {}, std::vector<double> item_bias = {})
      : user_factors_(std::move(user_factors)),
        item_factors_(std::move(item_factors)),
        offset_(offset),
        user_bias_(std::move(user_bias)),
        item_bias_(std::move(item_bias)) {}

  std::size_t n_users() const override { return static_cast<std::size_t>(user_factors_.rows()); }
  std::size_t n_items() const override { return static_cast<std::size_t>(item_factors_.rows()); }
  const DenseMatrix& user_factors() const { return user_factors_; }
  const DenseMatrix& item_factors() const { return item_factors_; }

  double predict(Index u, Index i) const {
    double s = offset_ + user_factors_.row(u).dot(item_factors_.row(i));
    if (!user_bias_.empty()) s += user_bias_[u];
    if (!item_bias_.empty()) s += item_bias_[i];
    return s;
  }

  void score(Index u, std::span<double> out) const override {
    Eigen::Map<Eigen::VectorXd> dst(out.data(), static_cast<Eigen::Index>(out.size()));
    dst.noalias() = item_factors_ * user_factors_.row(u).transpose();
    const double base = offset_ + (user_bias_.empty() ? 0.0 : user_bias_[u]);
    for (Index i = 0; i < out.size(); ++i) out[i] += base + (item_bias_.empty() ? 0.0 : item_bias_[i]);
  }

 private:
  DenseMatrix user_factors_, item_factors_;
  double offset_;
  std::vector<double> user_bias_, item_bias_;
};

namespace detail {

struct Triple {
  Index user, item;
  double rating;
};

inline std::vector<Triple> triples(const RatingMatrix& m) {
  std::vector<Triple> out;
  out.reserve(m.nnz());
  for (Index u = 0; u < m.n_users(); ++u)
    for (const auto& e : m.row(u)) out.push_back({u, e.index, e.value});
  return out;
}

inline void check_factor_params(std::size_t factors, std::size_t epochs, double learning_rate) {
  if (factors < 1) throw DataError("factor count must be >= 1");
  if (epochs < 1) throw DataError("epoch/iteration count must be >= 1");
  if (!(learning_rate > 0)) throw DataError("learning rate must be positive");
}

}  // namespace detail

struct FunkSvdParams {
  std::size_t factors = 50;
  double learning_rate = 0.005;
  double regularization = 0.02;
  std::size_t epochs = 10;  // per feature
  double init = 0.1;
};

// Features are trained one after another. Each epoch visits the training
// triples in a freshly seeded shuffled order; the prediction for a triple
// is the cached sum over finished features plus the current feature.
inline FactorModel fit_funk_svd(const RatingMatrix& m, const FunkSvdParams& p, std::uint64_t seed) {
  detail::check_factor_params(p.factors, p.epochs, p.learning_rate);
  const auto f = static_cast<Eigen::Index>(p.factors);
  DenseMatrix users = DenseMatrix::Zero(static_cast<Eigen::Index>(m.n_users()), f);
  DenseMatrix items = DenseMatrix::Zero(static_cast<Eigen::Index>(m.n_items()), f);
  const auto data = detail::triples(m);
  std::vector<double> cached(data.size(), 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);

  for (Eigen::Index k = 0; k < f; ++k) {
    users.col(k).setConstant(p.init);
    items.col(k).setConstant(p.init);
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
      rng.shuffle(std::span(order));
      for (auto t : order) {
        const auto& x = data[t];
        double& uf = users(x.user, k);
        double& itf = items(x.item, k);
        const double err = x.rating - (cached[t] + uf * itf);
        const double u_old = uf;
        uf += p.learning_rate * (err * itf - p.regularization * uf);
        itf += p.learning_rate * (err * u_old - p.regularization * itf);
      }
    }
    for (std::size_t t = 0; t < data.size(); ++t) cached[t] += users(data[t].user, k) * items(data[t].item, k);
  }
  return FactorModel(std::move(users), std::move(items));
}

struct BiasedMfParams {
  std::size_t factors = 50;
  double learning_rate = 0.005;
  double regularization = 0.02;
  std::size_t epochs = 20;
  double damping = 5.0;
};

// r_hat = mu + b_u + b_i + U_u . V_i. Offsets start from the damped bias
// baseline; factors start uniform in [-0.1, 0.1). Offsets and factors are
// updated jointly by SGD over a seeded shuffle per epoch.
inline FactorModel fit_biased_mf(const RatingMatrix& m, const BiasedMfParams& p, std::uint64_t seed) {
  detail::check_factor_params(p.factors, p.epochs, p.learning_rate);
  const BiasModel base = fit_bias(m, p.damping);
  std::vector<double> bu = base.user_bias(), bi = base.item_bias();
  const double mu = base.global_mean();
  const auto f = static_cast<Eigen::Index>(p.factors);
  Rng rng(seed);
  DenseMatrix users(static_cast<Eigen::Index>(m.n_users()), f);
  DenseMatrix items(static_cast<Eigen::Index>(m.n_items()), f);
  for (Eigen::Index r = 0; r < users.rows(); ++r)
    for (Eigen::Index c = 0; c < f; ++c) users(r, c) = rng.uniform(-0.1, 0.1);
  for (Eigen::Index r = 0; r < items.rows(); ++r)
    for (Eigen::Index c = 0; c < f; ++c) items(r, c) = rng.uniform(-0.1, 0.1);

  const auto data = detail::triples(m);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const double lr = p.learning_rate, reg = p.regularization;
  Eigen::VectorXd u_old(f);
  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (auto t : order) {
      const auto& x = data[t];
      auto urow = users.row(x.user);
      auto irow = items.row(x.item);
      const double err = x.rating - (mu + bu[x.user] + bi[x.item] + urow.dot(irow));
      bu[x.user] += lr * (err - reg * bu[x.user]);
      bi[x.item] += lr * (err - reg * bi[x.item]);
      u_old = urow.transpose();
      urow += lr * (err * irow - reg * urow);
      irow += lr * (err * u_old.transpose() - reg * irow);
    }
  }
  return FactorModel(std::move(users), std::move(items), mu, std::move(bu), std::move(bi));
}

struct SvdParams {
  std::size_t factors = 100;
  std::size_t power_iterations = 2;
  std::size_t oversample = 10;
  bool binarize = true;
};

struct TruncatedSvd {
  DenseMatrix u;          // n_users x f, orthonormal columns
  Eigen::VectorXd sigma;  // f, descending
  DenseMatrix v;          // n_items x f, orthonormal columns
};

namespace detail {

inline DenseMatrix thin_q(const DenseMatrix& a) {
  Eigen::HouseholderQR<DenseMatrix> qr(a);
  return qr.householderQ() * DenseMatrix::Identity(a.rows(), a.cols());
}

}  // namespace detail

// Randomized range finder with re-orthonormalized power iterations, then an
// exact SVD of the small projected matrix.
inline TruncatedSvd randomized_svd(const SparseMatrix& x, std::size_t factors, std::size_t power_iterations,
                                   std::size_t oversample, std::uint64_t seed) {
  const auto rows = x.rows(), cols = x.cols();
  const auto rank_cap = std::min(rows, cols);
  if (factors < 1 || static_cast<Eigen::Index>(factors) > rank_cap)
    throw DataError("svd factor count " + std::to_string(factors) + " exceeds min(n_users, n_items) = " +
                    std::to_string(rank_cap));
  const auto f = static_cast<Eigen::Index>(factors);
  const auto width = std::min<Eigen::Index>(f + static_cast<Eigen::Index>(oversample), rank_cap);

  Rng rng(seed);
  DenseMatrix omega(cols, width);
  for (Eigen::Index r = 0; r < cols; ++r)
    for (Eigen::Index c = 0; c < width; ++c) omega(r, c) = rng.uniform(-1.0, 1.0);

  DenseMatrix q = detail::thin_q(x * omega);
  for (std::size_t it = 0; it < power_iterations; ++it) {
    DenseMatrix z = detail::thin_q(x.transpose() * q);
    q = detail::thin_q(x * z);
  }
  const DenseMatrix bt = x.transpose() * q;  // (Q^T X)^T, cols x width
  Eigen::BDCSVD<DenseMatrix> small(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // B^T = P S R^T  =>  B = R S P^T, so left vectors of B are R.
  TruncatedSvd out;
  out.sigma = small.singularValues().head(f);
  out.v = small.matrixU().leftCols(f);
  out.u = q * small.matrixV().leftCols(f);
  return out;
}

inline FactorModel fit_svd(const RatingMatrix& m, const SvdParams& p, std::uint64_t seed) {
  auto svd = randomized_svd(to_sparse(m, p.binarize), p.factors, p.power_iterations, p.oversample, seed);
  DenseMatrix scaled = svd.u * svd.sigma.asDiagonal();
  return FactorModel(std::move(scaled), std::move(svd.v));
}

struct NmfParams {
  std::size_t factors = 50;
  std::size_t iterations = 100;
  bool binarize = true;
};

// ||X - W H||_F^2 evaluated without forming W H densely.
inline double nmf_objective(const SparseMatrix& x, const DenseMatrix& w, const DenseMatrix& h) {
  double sq = 0.0, cross = 0.0;
  for (Eigen::Index r = 0; r < x.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      sq += it.value() * it.value();
      cross += it.value() * w.row(r).dot(h.col(it.col()));
    }
  }
  const DenseMatrix wtw = w.transpose() * w;
  const DenseMatrix hht = h * h.transpose();
  return sq - 2.0 * cross + wtw.cwiseProduct(hht).sum();
}

using NmfObserver = std::function<void(std::size_t iteration, const DenseMatrix& w, const DenseMatrix& h)>;

// Lee-Seung multiplicative updates for the squared Frobenius loss, H then W
// each iteration. A zero denominator implies a zero numerator, so the entry
// is set to zero.
inline FactorModel fit_nmf(const RatingMatrix& m, const NmfParams& p, std::uint64_t seed,
                           const NmfObserver& observer = {}) {
  detail::check_factor_params(p.factors, p.iterations, 1.0);
  const SparseMatrix x = to_sparse(m, p.binarize);
  const SparseMatrix xt = x.transpose();
  const auto f = static_cast<Eigen::Index>(p.factors);
  Rng rng(seed);
  DenseMatrix w(x.rows(), f), h(f, x.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < f; ++c) w(r, c) = rng.uniform();
  for (Eigen::Index r = 0; r < f; ++r)
    for (Eigen::Index c = 0; c < h.cols(); ++c) h(r, c) = rng.uniform();

  auto apply = [](DenseMatrix& target, const DenseMatrix& num, const DenseMatrix& den) {
    for (Eigen::Index c = 0; c < target.cols(); ++c)
      for (Eigen::Index r = 0; r < target.rows(); ++r) {
        const double d = den(r, c);
        target(r, c) = d > 0.0 ? target(r, c) * (num(r, c) / d) : 0.0;
      }
  };

  for (std::size_t it = 0; it < p.iterations; ++it) {
    {
      const DenseMatrix num = (xt * w).transpose();  // W^T X
      const DenseMatrix den = (w.transpose() * w) * h;
      apply(h, num, den);
    }
    {
      const DenseMatrix num = x * h.transpose();  // X H^T
      const DenseMatrix den = w * (h * h.transpose());
      apply(w, num, den);
    }
    if (observer) observer(it, w, h);
  }
  DenseMatrix ht = h.transpose();
  return FactorModel(std::move(w), std::move(ht));
}

}  // namespace greenlens
