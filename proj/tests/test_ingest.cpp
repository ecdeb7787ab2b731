#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "greenlens/ingest.hpp"
#include "greenlens/rng.hpp"
#include "support.hpp"

using namespace greenlens;

namespace {

InteractionDataset parse(const std::string& text, Format f, const ParseOptions& opts = {}) {
  std::istringstream in(text);
  return parse_interactions(in, f, opts);
}

std::string error_of(const std::string& text, Format f, const ParseOptions& opts = {}) {
  try {
    parse(text, f, opts);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// Multiset of (external user, external item, rating, timestamp).
using Row = std::tuple<std::string, std::string, double, std::optional<std::int64_t>>;
std::multiset<Row> external_rows(const InteractionDataset& ds) {
  std::multiset<Row> out;
  for (const auto& x : ds.interactions) out.emplace(ds.users.id(x.user), ds.items.id(x.item), x.rating, x.timestamp);
  return out;
}

}  // namespace

TEST(Ingest, Ml100kRow) {
  const auto ds = parse("196\t242\t3\t881250949\n", Format::ml100k_tsv);
  ASSERT_EQ(ds.size(), 1u);
  const auto& x = ds.interactions[0];
  EXPECT_EQ(ds.users.id(x.user), "196");
  EXPECT_EQ(ds.items.id(x.item), "242");
  EXPECT_DOUBLE_EQ(x.rating, 3.0);
  EXPECT_EQ(x.timestamp, 881250949);
}

TEST(Ingest, MlDatRow) {
  const auto ds = parse("1::1193::5::978300760\n", Format::ml_dat);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.users.id(0), "1");
  EXPECT_EQ(ds.items.id(0), "1193");
  EXPECT_DOUBLE_EQ(ds.interactions[0].rating, 5.0);
  EXPECT_EQ(ds.interactions[0].timestamp, 978300760);
}

TEST(Ingest, EmptyFileGivesEmptyDataset) {
  for (auto f : {Format::ml100k_tsv, Format::ml_dat, Format::amazon_csv, Format::canonical_csv}) {
    const auto ds = parse("", f);
    EXPECT_TRUE(ds.empty());
    EXPECT_EQ(ds.n_users(), 0u);
    EXPECT_EQ(ds.n_items(), 0u);
  }
}

TEST(Ingest, FirstAppearanceIndexing) {
  const auto ds = parse("9\t5\t1\t0\n3\t5\t2\t0\n9\t1\t3\t0\n", Format::ml100k_tsv);
  EXPECT_EQ(ds.users.ids(), (std::vector<std::string>{"9", "3"}));
  EXPECT_EQ(ds.items.ids(), (std::vector<std::string>{"5", "1"}));
  EXPECT_EQ(ds.interactions[2].user, 0u);
  EXPECT_EQ(ds.interactions[2].item, 1u);
}

TEST(Ingest, AmazonHeaderAndColumnOrder) {
  ParseOptions opts;
  opts.column_order = ColumnOrder::parse({"item", "user", "rating", "timestamp"});
  const auto ds = parse("item,user,rating,ts\nB00X,A1,4.0,1400000000\nB00Y,A1,5.0,1400000001\n",
                        Format::amazon_csv, opts);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.users.ids(), (std::vector<std::string>{"A1"}));
  EXPECT_EQ(ds.items.ids(), (std::vector<std::string>{"B00X", "B00Y"}));
}

TEST(Ingest, AmazonWithoutTimestamp) {
  const auto ds = parse("A1,B1,5\nA2,B1,1\n", Format::amazon_csv);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_FALSE(ds.interactions[0].timestamp.has_value());

  ParseOptions opts;
  opts.column_order = ColumnOrder::parse({"user", "item", "rating"});
  EXPECT_EQ(parse("A1,B1,5\n", Format::amazon_csv, opts).size(), 1u);
}

TEST(Ingest, ColumnOrderErrors) {
  EXPECT_THROW(ColumnOrder::parse({"user", "item"}), DataError);
  EXPECT_THROW(ColumnOrder::parse({"user", "user", "item", "rating"}), DataError);
  EXPECT_THROW(ColumnOrder::parse({"user", "item", "stars"}), DataError);
}

TEST(Ingest, ErrorsNameTheLine) {
  EXPECT_NE(error_of("1\t2\t3\t4\n1\t2\t3\n", Format::ml100k_tsv).find("line 2"), std::string::npos);
  EXPECT_NE(error_of("1\t2\tx\t4\n", Format::ml100k_tsv).find("line 1"), std::string::npos);
  EXPECT_NE(error_of("1::2::9::4\n", Format::ml_dat).find("outside scale"), std::string::npos);
  EXPECT_NE(error_of("1,2,3,-5\n", Format::canonical_csv).find("negative"), std::string::npos);
  // A header is tolerated only on the first line.
  EXPECT_NE(error_of("a,b,4,0\nuser,item,rating,ts\n", Format::amazon_csv).find("line 2"), std::string::npos);
}

TEST(Ingest, CustomScale) {
  ParseOptions opts;
  opts.scale = RatingScale{1, 10, 1};
  EXPECT_EQ(parse("1\t2\t9\t4\n", Format::ml100k_tsv, opts).size(), 1u);
  EXPECT_THROW(parse("1\t2\t9\t4\n", Format::ml100k_tsv), DataError);
}

TEST(Ingest, MissingFile) { EXPECT_THROW(parse_interactions("/nonexistent/u.data", Format::ml100k_tsv), DataError); }

TEST(Ingest, CanonicalCsvLayout) {
  auto ds = support::make_dataset({{"u,1", "i\"2", 4.5}});
  ds.interactions[0].timestamp = 7;
  ds.interactions.push_back({0, 0, 3.0, std::nullopt});
  EXPECT_EQ(canonical_csv(ds), "user_id,item_id,rating,timestamp\n\"u,1\",\"i\"\"2\",4.5,7\n\"u,1\",\"i\"\"2\",3,\n");
}

TEST(Stats, SingleInteraction) {
  const auto ds = support::make_dataset({{"u", "i", 5.0}});
  EXPECT_EQ(dataset_stats(ds), (StatsRow{1, 1, 1, 1, 1}));
}

TEST(Stats, EmptyDatasetIsAnError) { EXPECT_THROW(dataset_stats(InteractionDataset{}), DataError); }

TEST(Stats, AveragesTruncate) {
  // 5 interactions over 2 users and 3 items: 2.5 -> 2, 1.67 -> 1
  const auto ds = support::make_dataset({{"a", "x", 1}, {"a", "y", 1}, {"a", "z", 1}, {"b", "x", 1}, {"b", "y", 1}});
  EXPECT_EQ(dataset_stats(ds), (StatsRow{2, 3, 5, 2, 1}));
}

// Random datasets with awkward ids: serialize, re-parse, compare.
TEST(IngestProperty, CanonicalRoundTrip) {
  Rng rng(20240601);
  const std::vector<std::string> pieces{"a", "b", ",", "\"", " x", "7", "é"};
  for (int trial = 0; trial < 200; ++trial) {
    InteractionDataset ds;
    const auto n = 1 + rng.below(40);
    for (std::uint64_t r = 0; r < n; ++r) {
      std::string u = "u", i = "i";
      for (std::uint64_t k = 0; k < 1 + rng.below(3); ++k) u += pieces[rng.below(pieces.size())];
      for (std::uint64_t k = 0; k < 1 + rng.below(3); ++k) i += pieces[rng.below(pieces.size())];
      Interaction x{ds.users.intern(u), ds.items.intern(i), 0.5 * static_cast<double>(1 + rng.below(10)), {}};
      if (rng.below(2)) x.timestamp = static_cast<std::int64_t>(rng.below(2'000'000'000));
      ds.interactions.push_back(x);
    }
    const auto back = parse(canonical_csv(ds), Format::canonical_csv);
    EXPECT_EQ(external_rows(back), external_rows(ds));
    EXPECT_EQ(dataset_stats(back), dataset_stats(ds));
    EXPECT_EQ(back.users, ds.users);
    EXPECT_EQ(back.items, ds.items);
    EXPECT_EQ(dataset_stats(back).n_interactions, back.interactions.size());
  }
}

TEST(IngestProperty, ParsingIsDeterministic) {
  support::TempDir dir;
  std::ostringstream text;
  Rng rng(3);
  for (int r = 0; r < 500; ++r)
    text << rng.below(50) << '\t' << rng.below(80) << '\t' << 1 + rng.below(5) << '\t' << rng.below(1000) << '\n';
  support::spit(dir / "u.data", text.str());
  const auto a = parse_interactions((dir / "u.data").string(), Format::ml100k_tsv);
  const auto b = parse_interactions((dir / "u.data").string(), Format::ml100k_tsv);
  EXPECT_EQ(a.interactions, b.interactions);
  EXPECT_EQ(a.users, b.users);
  EXPECT_EQ(a.items, b.items);
}
