#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "greenlens/ingest.hpp"

namespace greenlens::support {

// Builds a dataset from (user, item, rating) triples using the given
// external ids, in order.
inline InteractionDataset make_dataset(const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  InteractionDataset ds;
  ds.scale = {0.5, 5.0, 0.5};
  for (const auto& [u, i, r] : rows) ds.interactions.push_back({ds.users.intern(u), ds.items.intern(i), r, {}});
  return ds;
}

// Dataset where every (u, i) pair in the given list appears once, ids "u<n>" / "i<n>".
inline InteractionDataset make_graph(const std::vector<std::pair<int, int>>& edges, double rating = 4.0) {
  InteractionDataset ds;
  ds.scale = {0.5, 5.0, 0.5};
  for (auto [u, i] : edges)
    ds.interactions.push_back(
        {ds.users.intern("u" + std::to_string(u)), ds.items.intern("i" + std::to_string(i)), rating, {}});
  return ds;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("greenlens_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace greenlens::support
