#include <gtest/gtest.h>

#include "greenlens/matrix.hpp"

using namespace greenlens;

TEST(Matrix, RowsAndColumns) {
  const std::vector<Interaction> rows{{0, 0, 4.0, {}}, {0, 1, 2.0, {}}, {1, 0, 5.0, {}}};
  const auto m = build_matrix(rows, 2, 2);
  EXPECT_EQ(m.nnz(), 3u);
  EXPECT_EQ(std::vector<Entry>(m.row(0).begin(), m.row(0).end()), (std::vector<Entry>{{0, 4.0}, {1, 2.0}}));
  EXPECT_EQ(std::vector<Entry>(m.col(0).begin(), m.col(0).end()), (std::vector<Entry>{{0, 4.0}, {1, 5.0}}));
  EXPECT_EQ(std::vector<Entry>(m.row(1).begin(), m.row(1).end()), (std::vector<Entry>{{0, 5.0}}));
}

TEST(Matrix, Binarized) {
  const std::vector<Interaction> rows{{0, 0, 4.0, {}}, {0, 1, 2.0, {}}, {1, 0, 5.0, {}}};
  const auto m = build_matrix(rows, 2, 2, true);
  EXPECT_TRUE(m.binarized());
  for (Index u = 0; u < 2; ++u)
    for (const auto& e : m.row(u)) EXPECT_EQ(e.value, 1.0);
  for (Index i = 0; i < 2; ++i)
    for (const auto& e : m.col(i)) EXPECT_EQ(e.value, 1.0);
}

TEST(Matrix, EmptyTrainingSet) {
  const auto m = build_matrix({}, 3, 4);
  EXPECT_EQ(m.nnz(), 0u);
  EXPECT_EQ(m.n_users(), 3u);
  EXPECT_EQ(m.n_items(), 4u);
  for (Index u = 0; u < 3; ++u) EXPECT_TRUE(m.row(u).empty());
  for (Index i = 0; i < 4; ++i) EXPECT_TRUE(m.col(i).empty());
}

TEST(Matrix, Errors) {
  const std::vector<Interaction> out_of_range{{0, 5, 1.0, {}}};
  EXPECT_THROW(build_matrix(out_of_range, 2, 2), DataError);
  const std::vector<Interaction> dup{{0, 1, 1.0, {}}, {0, 1, 2.0, {}}};
  EXPECT_THROW(build_matrix(dup, 2, 2), DataError);
}

TEST(Matrix, SegmentsSortedRegardlessOfInputOrder) {
  const std::vector<Interaction> rows{{1, 2, 1, {}}, {0, 2, 2, {}}, {1, 0, 3, {}}, {0, 1, 4, {}}};
  const auto m = build_matrix(rows, 2, 3);
  EXPECT_EQ(m.row(1)[0].index, 0u);
  EXPECT_EQ(m.row(1)[1].index, 2u);
  EXPECT_EQ(m.col(2)[0].index, 0u);
  EXPECT_EQ(m.col(2)[1].index, 1u);
}
