#pragma once

// Per-user holdout split and nested training-set downsampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/ingest.hpp"
#include "greenlens/rng.hpp"

namespace greenlens {

struct SplitRatios {
  double test_frac = 0.1;
  double valid_frac = 0.1;

  void validate() const {
    if (!(test_frac > 0 && test_frac < 1) || !(valid_frac > 0 && valid_frac < 1) || test_frac + valid_frac >= 1)
      throw DataError("split ratios must lie in (0,1) and sum to less than 1");
  }
};

// Half-up rounding of a non-negative count. The epsilon absorbs products
// such as 0.3 * 5 that land a few ulps below an exact half.
inline std::size_t round_count(double x) { return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9)); }

inline std::size_t part_size(double frac, std::size_t n) {
  return std::max<std::size_t>(1, round_count(frac * static_cast<double>(n)));
}

struct SplitBundle {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  // Training interactions grouped by user; within a user they are stored in
  // the user's shuffled order, so prefixes are the downsampled subsets.
  std::vector<Interaction> train;
  std::vector<std::size_t> train_offsets;  // n_users + 1 entries
  std::vector<Interaction> validation;
  std::vector<Interaction> test;

  std::span<const Interaction> user_train(Index u) const {
    return std::span(train).subspan(train_offsets[u], train_offsets[u + 1] - train_offsets[u]);
  }
};

inline SplitBundle user_holdout_split(const InteractionDataset& ds, SplitRatios ratios, std::uint64_t seed) {
  ratios.validate();
  SplitBundle b;
  b.n_users = ds.n_users();
  b.n_items = ds.n_items();
  b.seed = seed;
  b.ratios = ratios;

  std::vector<std::vector<Interaction>> per_user(b.n_users);
  for (const auto& x : ds.interactions) per_user[x.user].push_back(x);

  b.train_offsets.assign(1, 0);
  b.train.reserve(ds.size());
  for (Index u = 0; u < b.n_users; ++u) {
    auto& rows = per_user[u];
    const std::size_t n = rows.size();
    const std::size_t n_test = part_size(ratios.test_frac, n);
    const std::size_t n_valid = part_size(ratios.valid_frac, n);
    if (n < 3 || n_test + n_valid >= n) {
      throw DataError("user '" + ds.users.id(u) + "' has only " + std::to_string(n) +
                      " interactions; too few to split (was the dataset preprocessed?)");
    }
    Rng rng(mix_seed(seed, u));
    rng.shuffle(std::span(rows));
    b.test.insert(b.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    b.validation.insert(b.validation.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test),
                        rows.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
    b.train.insert(b.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), rows.end());
    b.train_offsets.push_back(b.train.size());
  }
  return b;
}

inline void validate_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("downsample fraction must lie in (0, 1]");
}

// First max(1, round(fraction * n_u)) shuffled training interactions of
// every user. Prefixes make the subsets nested across fractions.
inline std::vector<Interaction> downsample_train(const SplitBundle& b, double fraction) {
  validate_fraction(fraction);
  std::vector<Interaction> out;
  for (Index u = 0; u < b.n_users; ++u) {
    const auto rows = b.user_train(u);
    if (rows.empty()) continue;
    const auto take = std::min(rows.size(), part_size(fraction, rows.size()));
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

inline std::uint64_t dataset_fingerprint(const InteractionDataset& ds) { return fnv1a(canonical_csv(ds)); }

// Writes train.csv, validation.csv, test.csv (canonical CSV, train rows in
// per-user shuffled order) and manifest.json into `dir`.
inline void write_split(const SplitBundle& b, const InteractionDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto part = [&](const std::vector<Interaction>& rows, const char* name) {
    InteractionDataset view;
    view.users = ds.users;
    view.items = ds.items;
    view.interactions = rows;
    write_canonical_csv((dir / name).string(), view);
  };
  part(b.train, "train.csv");
  part(b.validation, "validation.csv");
  part(b.test, "test.csv");

  std::vector<std::size_t> n_valid(b.n_users), n_test(b.n_users);
  for (const auto& x : b.validation) ++n_valid[x.user];
  for (const auto& x : b.test) ++n_test[x.user];
  nlohmann::json counts = nlohmann::json::array();
  for (Index u = 0; u < b.n_users; ++u) {
    counts.push_back({{"user", ds.users.id(u)},
                      {"train", b.train_offsets[u + 1] - b.train_offsets[u]},
                      {"validation", n_valid[u]},
                      {"test", n_test[u]}});
  }
  nlohmann::json manifest = {
      {"seed", b.seed},
      {"ratios", {{"test", b.ratios.test_frac}, {"validation", b.ratios.valid_frac}}},
      {"rng", "mt19937_64 seeded with splitmix64(mix(seed, dense user index)); Fisher-Yates"},
      {"dataset_fingerprint", text::hex64(dataset_fingerprint(ds))},
      {"per_user_counts", counts}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

}  // namespace greenlens
