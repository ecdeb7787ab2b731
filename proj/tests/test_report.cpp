#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <regex>
#include <sstream>

#include "greenlens/report.hpp"
#include "support.hpp"

using namespace greenlens;

namespace {

ExperimentRecord rec(const std::string& algo, double fraction, std::uint64_t seed, double ndcg, double secs = 1.0,
                     const std::string& dataset = "d") {
  ExperimentRecord r;
  r.dataset = dataset;
  r.algorithm = algo;
  r.params_fingerprint = "0";
  r.fraction = fraction;
  r.seed = seed;
  r.ndcg_mean = ndcg;
  r.n_evaluated = 10;
  r.fit_seconds = secs * 0.75;
  r.eval_seconds = secs * 0.25;
  return r;
}

Curve curve(const std::string& algo, std::vector<std::pair<double, double>> rel) {
  Curve c;
  c.dataset = "d";
  c.algorithm = algo;
  for (auto [f, r] : rel) c.points.push_back({f, r, 0.0, r, 1});
  return c;
}

// Minimal well-formedness: tags nest and close properly.
bool balanced_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[0].str().rfind("<?", 0) == 0) continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else if (m[3] != "/") {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(support::slurp(p));
  std::string line;
  while (std::getline(in, line)) rows.push_back(text::csv_split(line));
  return rows;
}

}  // namespace

TEST(Curves, AnchorOnly) {
  const auto c = build_curves({rec("svd", 1.0, 1, 0.3)});
  ASSERT_EQ(c.size(), 1u);
  ASSERT_EQ(c[0].points.size(), 1u);
  EXPECT_EQ(c[0].points[0].relative, 1.0);
  EXPECT_EQ(c[0].points[0].std, 0.0);
}

TEST(Curves, RelativeValue) {
  const auto c = build_curves({rec("svd", 0.5, 1, 0.2), rec("svd", 1.0, 1, 0.4)});
  EXPECT_DOUBLE_EQ(c[0].at(0.5)->relative, 0.5);
}

TEST(Curves, PopulationStd) {
  const auto c = build_curves({rec("svd", 1.0, 1, 0.3), rec("svd", 1.0, 2, 0.5)});
  EXPECT_NEAR(c[0].points[0].mean, 0.4, 1e-15);
  EXPECT_NEAR(c[0].points[0].std, 0.1, 1e-15);
}

TEST(Curves, MissingAnchorNamesAlgorithm) {
  try {
    build_curves({rec("nmf", 0.5, 1, 0.2)});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nmf"), std::string::npos);
  }
}

TEST(Curves, FailedRecordsAreIgnored) {
  auto bad = rec("svd", 0.5, 1, 0.0);
  bad.status = "failed";
  bad.ndcg_mean.reset();
  const auto c = build_curves({rec("svd", 1.0, 1, 0.4), bad});
  EXPECT_EQ(c[0].points.size(), 1u);
}

TEST(Groups, Examples) {
  GroupMap g;
  g.group1 = {"a"};
  g.group2 = {"b", "c"};
  const std::vector<Curve> flat{curve("a", {{0.5, 1}, {1, 1}}), curve("b", {{0.5, 1}, {1, 1}}),
                                curve("c", {{0.5, 1}, {1, 1}})};
  for (const auto& d : group_summary(flat, g, {0.5, 1.0})) EXPECT_NEAR(d.drop_pct, 0.0, 1e-12);

  const std::vector<Curve> cs{curve("a", {{0.5, 0.77}, {1, 1}}), curve("b", {{0.3, 0.5}, {1, 1}}),
                              curve("c", {{0.3, 0.6}, {1, 1}})};
  GroupMap one;
  one.group1 = {"a"};
  one.group2.clear();
  EXPECT_NEAR(group_summary(cs, one, {0.5})[0].drop_pct, 23.0, 1e-9);
  GroupMap two;
  two.group1.clear();
  two.group2 = {"b", "c"};
  EXPECT_NEAR(group_summary(cs, two, {0.3})[0].drop_pct, 45.0, 1e-9);
}

TEST(Groups, MissingMemberIsAnError) {
  GroupMap g;
  g.group1 = {"a", "zzz"};
  g.group2.clear();
  EXPECT_THROW(group_summary({curve("a", {{1, 1}})}, g, {1.0}), DataError);
}

TEST(ReportProperty, PermutationInvariance) {
  std::vector<ExperimentRecord> recs;
  Rng rng(13);
  for (const char* a : {"svd", "bias", "nmf", "popularity"})
    for (double f : {0.1, 0.5, 1.0})
      for (std::uint64_t s = 1; s <= 3; ++s) recs.push_back(rec(a, f, s, 0.01 + 0.3 * rng.uniform()));
  const auto reference = build_curves(recs);
  for (int t = 0; t < 50; ++t) {
    rng.shuffle(std::span(recs));
    const auto c = build_curves(recs);
    ASSERT_EQ(c.size(), reference.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      EXPECT_EQ(c[k].algorithm, reference[k].algorithm);
      for (std::size_t p = 0; p < c[k].points.size(); ++p) {
        EXPECT_EQ(c[k].points[p].mean, reference[k].points[p].mean);
        EXPECT_EQ(c[k].points[p].std, reference[k].points[p].std);
      }
      EXPECT_EQ(c[k].at(1.0)->relative, 1.0);
    }
  }
}

TEST(Runtime, RatiosAnchorAtOne) {
  const auto rs = runtime_ratios({rec("svd", 0.5, 1, 0.1, 2.0), rec("svd", 1.0, 1, 0.2, 4.0),
                                  rec("svd", 0.5, 2, 0.1, 1.0), rec("svd", 1.0, 2, 0.2, 2.0)});
  for (const auto& r : rs) {
    if (r.fraction == 1.0) { EXPECT_EQ(r.ratio, 1.0); }
    if (r.fraction == 0.5) { EXPECT_NEAR(r.ratio, 0.5, 1e-12); }
  }
}

TEST(Report, EmptyInputWritesNothing) {
  support::TempDir dir;
  EXPECT_THROW(emit_report({}, GroupMap{}, dir / "out"), DataError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));
}

TEST(Report, OneAlgorithmTwoFractions) {
  support::TempDir dir;
  emit_report({rec("svd", 0.5, 1, 0.2), rec("svd", 1.0, 1, 0.4)}, GroupMap{}, dir.path());
  const auto rows = read_csv(dir / "curves.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"dataset", "algorithm", "fraction", "mean", "std", "relative"}));
  EXPECT_EQ(rows[1][2], "0.50");
  EXPECT_EQ(rows[2][5], "1");
}

TEST(Report, FilesAreConsistent) {
  support::TempDir dir;
  std::vector<ExperimentRecord> recs;
  Rng rng(99);
  const GroupMap groups;
  std::vector<std::string> algos = groups.group1;
  algos.insert(algos.end(), groups.group2.begin(), groups.group2.end());
  algos.push_back("random");
  for (const auto& a : algos)
    for (double f : {0.1, 0.5, 1.0})
      for (std::uint64_t s = 1; s <= 3; ++s)
        recs.push_back(rec(a, f, s, 0.05 + 0.2 * f * rng.uniform() + 0.01, 0.1 + f * rng.uniform(), "ml 100k"));
  const auto files = emit_report(recs, groups, dir.path());
  EXPECT_EQ(files.written.size(), 6u);

  // groups.csv recomputed from curves.csv.
  std::map<std::pair<std::string, std::string>, double> rel;
  for (const auto& row : read_csv(dir / "curves.csv")) {
    if (row[0] == "dataset") continue;
    rel[{row[1], row[2]}] = std::stod(row[5]);
    if (row[2] == "1.00") { EXPECT_EQ(row[5], "1"); }
  }
  for (const auto& row : read_csv(dir / "groups.csv")) {
    if (row[0] == "dataset") continue;
    const auto& members = row[1] == "group1" ? groups.group1 : groups.group2;
    double s = 0;
    for (const auto& m : members) s += rel.at({m, row[2]});
    EXPECT_NEAR(std::stod(row[3]), 100 * (1 - s / static_cast<double>(members.size())), 1e-9);
  }
  for (const auto& row : read_csv(dir / "runtime_ratios.csv"))
    if (row[2] == "1.00") { EXPECT_EQ(row[3], "1"); }

  const auto curves = support::slurp(dir / "ml_100k_curves.svg");
  EXPECT_TRUE(balanced_xml(curves));
  EXPECT_EQ(count(curves, "<polyline"), algos.size());
  for (const auto& a : algos) EXPECT_NE(curves.find("data-algorithm=\"" + a + "\""), std::string::npos);

  const auto boxes = support::slurp(dir / "ml_100k_groups_50v100.svg");
  EXPECT_TRUE(balanced_xml(boxes));
  EXPECT_EQ(count(boxes, "class=\"box\""), 4u);
  EXPECT_NE(boxes.find("data-group=\"group1\" data-fraction=\"0.50\""), std::string::npos);

  const auto energy = nlohmann::json::parse(support::slurp(dir / "energy.json"));
  EXPECT_TRUE(energy.contains("ml 100k"));
}
