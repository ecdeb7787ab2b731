// Acceptance driver. Prints one PASS/FAIL line per requested criterion.
// Exit 0 if all pass, 1 on any failure, 77 when a criterion's data is absent.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "greenlens/green.hpp"
#include "greenlens/preprocess.hpp"
#include "greenlens/report.hpp"
#include "greenlens/runner.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace greenlens;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;
const fs::path kData = GREENLENS_TEST_DATA_DIR;

struct Outcome {
  bool pass = false;
  bool skipped = false;
};

Outcome report(int n, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  return {pass, false};
}

Outcome skipped(int n, const std::string& why) {
  std::cout << "FAIL criterion " << n << ": not verified, " << why << std::endl;
  return {false, true};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

Outcome table_row(int n, const fs::path& path, Format format, StatsRow expected, double budget) {
  if (!fs::exists(path)) return skipped(n, path.string() + " is missing");
  const auto t0 = std::chrono::steady_clock::now();
  const auto raw = parse_interactions(path.string(), format);
  const auto kept = preprocess_pipeline(raw, 10);
  const double secs = seconds_since(t0);
  const auto got = dataset_stats(kept);
  std::ostringstream d;
  d << "10-core of " << path.filename().string() << " = " << got << ", expected " << expected << ", " << fmt(secs, 2)
    << " s (budget " << budget << " s)";
  if (!(got == expected)) {
    const auto single = k_core_single_pass(dedup_average(raw), KCoreParams{10});
    d << "; single pass gives " << (single.empty() ? std::string("empty") : (std::ostringstream() << dataset_stats(single)).str());
  }
  return report(n, got == expected && secs < budget, d.str());
}

Outcome criterion3() {
  const double g = estimate_co2_savings(0.72, {});
  return report(3, std::abs(g - 27474.72) < 1e-6 && std::abs(g - 27400.0) <= 200.0,
                "savings at ratio 0.72 = " + fmt(g, 2) + " g, reference 27.4 kg +/- 200 g");
}

Outcome criterion4() {
  std::mt19937_64 gen(20240601);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = std::uniform_int_distribution<unsigned>(1, 20)(gen);
    std::vector<unsigned> items(n);
    for (unsigned i = 0; i < n; ++i) items[i] = i;
    std::shuffle(items.begin(), items.end(), gen);
    const auto len = std::uniform_int_distribution<unsigned>(0, n)(gen);
    std::vector<unsigned> ranked(items.begin(), items.begin() + len);
    std::shuffle(items.begin(), items.end(), gen);
    const auto n_rel = std::uniform_int_distribution<unsigned>(1, std::min(5u, n))(gen);
    std::set<unsigned> rel(items.begin(), items.begin() + n_rel);
    const auto k = std::uniform_int_distribution<std::size_t>(1, 20)(gen);
    const std::vector<Index> r(ranked.begin(), ranked.end()), rv(rel.begin(), rel.end());
    worst = std::max(worst, std::abs(ndcg_at_k(r, rv, k) - oracle::ndcg(ranked, rel, k)));
  }
  const double secs = seconds_since(t0);
  return report(4, worst <= 1e-12 && secs < 5,
                "1000 instances, max |diff| = " + (std::ostringstream() << worst).str() + ", " + fmt(secs, 2) + " s");
}

Outcome criterion5() {
  std::mt19937_64 gen(77);
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0, checks = 0;
  for (int t = 0; t < 100; ++t) {
    const auto edges = oracle::random_graph(gen, 50, 50);
    std::vector<std::tuple<std::string, std::string, double>> rows;
    for (const auto& [u, i] : edges) rows.emplace_back(u, i, 3.0);
    const auto ds = support::make_dataset(rows);
    for (int k : {2, 3, 10}) {
      const auto got = k_core(ds, KCoreParams{k});
      std::set<oracle::Edge> got_edges;
      for (const auto& x : got.interactions) got_edges.emplace(got.users.id(x.user), got.items.id(x.item));
      mismatches += got_edges != oracle::k_core(edges, k, gen);
      ++checks;
    }
  }
  const double secs = seconds_since(t0);
  return report(5, mismatches == 0 && secs < 5,
                std::to_string(checks) + " graph/k pairs, " + std::to_string(mismatches) + " mismatches, " +
                    fmt(secs, 2) + " s");
}

ExperimentConfig ml100k_config(const fs::path& out) {
  ExperimentConfig c;
  c.dataset.id = "ml-100k";
  c.dataset.path = (kData / "ml-100k" / "u.data").string();
  c.dataset.format = Format::ml100k_tsv;
  c.k_core = 10;
  c.output_dir = out;
  return c;
}

std::vector<Outcome> criteria678(const std::set<int>& wanted) {
  std::vector<Outcome> out;
  const auto path = kData / "ml-100k" / "u.data";
  if (!fs::exists(path)) {
    for (int n : wanted) out.push_back(skipped(n, path.string() + " is missing"));
    return out;
  }
  support::TempDir dir;
  auto c = ml100k_config(dir / "grid");
  c.fractions = {0.1, 0.5, 1.0};
  c.seeds = {1, 2, 3};
  c.exclusive_timing = true;
  for (auto k : kAllAlgorithms) c.algorithms.push_back({k, default_grid(k)});
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_grid(c);
  const double secs = seconds_since(t0);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok() ? 0 : 1;
  std::cout << "info: grid of " << records.size() << " cells (" << failed << " failed) in " << fmt(secs, 1) << " s"
            << std::endl;
  const auto curves = build_curves(records);

  if (wanted.count(6)) {
    bool ok = failed == 0 && secs < 1800;
    std::ostringstream d;
    for (const auto& cv : curves) {
      const double m1 = cv.at(0.1)->mean, m5 = cv.at(0.5)->mean, m10 = cv.at(1.0)->mean;
      d << cv.algorithm << " " << fmt(m1) << "/" << fmt(m5) << "/" << fmt(m10) << "; ";
      if (cv.algorithm == "random") {
        const double spread = std::max({m1, m5, m10}) - std::min({m1, m5, m10});
        ok = ok && spread <= 0.01;
      } else {
        ok = ok && m10 >= m5 - 0.005 && m5 >= m1 - 0.005;
      }
    }
    out.push_back(report(6, ok, "mean nDCG@10 at 0.1/0.5/1.0: " + d.str() + fmt(secs / 60, 1) + " min"));
  }
  if (wanted.count(7)) {
    double g1 = 0, g2 = 0;
    for (const auto& d : group_summary(curves, GroupMap{}, {0.5})) (d.group == "group1" ? g1 : g2) = d.drop_pct;
    out.push_back(report(7, g1 - g2 >= 10.0,
                         "drop at 0.5: group1 " + fmt(g1, 1) + "%, group2 " + fmt(g2, 1) + "%, gap " +
                             fmt(g1 - g2, 1) + " pp (need >= 10)"));
  }
  if (wanted.count(8)) {
    const std::set<std::string> checked{"user_knn", "item_knn", "funk_svd", "biased_mf", "svd", "nmf"};
    bool ok = true;
    std::ostringstream d;
    double mean_ratio = std::nan("");
    for (const auto& r : runtime_ratios(records)) {
      if (r.fraction != 0.5) continue;
      if (r.algorithm == "__mean__") mean_ratio = r.ratio;
      if (!checked.count(r.algorithm)) continue;
      d << r.algorithm << " " << fmt(r.ratio, 3) << "; ";
      ok = ok && r.ratio < 0.95;
    }
    out.push_back(report(8, ok, "runtime ratio at 0.5 (need < 0.95): " + d.str()));
    std::cout << "info: mean runtime ratio at 0.5 over all algorithms = " << fmt(mean_ratio, 3)
              << " (reference figure 0.72, hardware dependent, not asserted)" << std::endl;
  }
  return out;
}

// Compares every column except completed_at and the two wall-clock columns,
// which cannot repeat between executions.
Outcome criterion9() {
  const auto path = kData / "ml-100k" / "u.data";
  if (!fs::exists(path)) return skipped(9, path.string() + " is missing");
  support::TempDir dir;
  std::vector<std::vector<std::string>> runs[2];
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < 2; ++r) {
    auto c = ml100k_config(dir / ("run" + std::to_string(r)));
    c.fractions = {0.1, 0.5, 1.0};
    c.seeds = {7};
    c.algorithms = {{AlgorithmKind::item_knn_binary, default_grid(AlgorithmKind::item_knn_binary)},
                    {AlgorithmKind::funk_svd, default_grid(AlgorithmKind::funk_svd)}};
    run_grid(c);
    std::istringstream in(support::slurp(c.results_path()));
    std::string line;
    while (std::getline(in, line)) {
      auto f = text::csv_split(line);
      if (f.size() == 12) f[7] = f[8] = f[11] = "";
      runs[r].push_back(f);
    }
  }
  const double secs = seconds_since(t0);
  const bool same = runs[0] == runs[1] && runs[0].size() == 7;
  return report(9, same && secs < 600,
                std::to_string(runs[0].size() - 1) + " rows per run, " + (same ? "identical" : "DIFFERENT") +
                    " outside completed_at, fit_seconds, eval_seconds (wall-clock columns excluded); " +
                    fmt(secs, 1) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"greenlens acceptance checks"};
  std::vector<int> requested;
  app.add_option("--criterion", requested, "Criterion number (repeatable); default all")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  std::set<int> wanted(requested.begin(), requested.end());
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::vector<Outcome> outcomes;
  try {
    if (wanted.count(1))
      outcomes.push_back(table_row(1, kData / "ml-100k" / "u.data", Format::ml100k_tsv, {943, 1152, 97953, 103, 85}, 10));
    if (wanted.count(2))
      outcomes.push_back(table_row(2, kData / "ml-1m" / "ratings.dat", Format::ml_dat, {6040, 3260, 998539, 165, 306}, 60));
    if (wanted.count(3)) outcomes.push_back(criterion3());
    if (wanted.count(4)) outcomes.push_back(criterion4());
    if (wanted.count(5)) outcomes.push_back(criterion5());
    std::set<int> grid;
    for (int n : {6, 7, 8})
      if (wanted.count(n)) grid.insert(n);
    if (!grid.empty())
      for (const auto& o : criteria678(grid)) outcomes.push_back(o);
    if (wanted.count(9)) outcomes.push_back(criterion9());
  } catch (const std::exception& e) {
    std::cout << "FAIL unexpected error: " << e.what() << std::endl;
    return 1;
  }

  bool any_fail = false, any_skip = false;
  for (const auto& o : outcomes) {
    any_skip = any_skip || o.skipped;
    any_fail = any_fail || (!o.pass && !o.skipped);
  }
  return any_fail ? 1 : any_skip ? kSkip : 0;
}
