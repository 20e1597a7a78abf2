#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "jncf/core/errors.hpp"
#include "jncf/data/loader.hpp"
#include "jncf/data/split.hpp"

namespace {

using namespace jncf;
namespace fs = std::filesystem;

RatingMatrix matrix_of(std::size_t m, std::size_t n, std::vector<Interaction> xs) {
  return RatingMatrix::from_interactions(m, n, xs);
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("jncf_test_" + std::to_string(::getpid()) + "_" + name);
}

TEST(Loader, ParsesThreeLineTabFile) {
  std::istringstream in("1\t10\t4\t881250949\n2\t20\t3\t891717742\n1\t30\t5\t878887116\n");
  const auto xs = parse_dataset(in, DatasetFormat::ml100k);
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(xs[0].user, "1");
  EXPECT_EQ(xs[0].item, "10");
  EXPECT_EQ(xs[0].rating, 4.0);
  EXPECT_EQ(xs[0].timestamp, 881250949);
  EXPECT_EQ(xs[2].item, "30");
  EXPECT_EQ(xs[2].rating, 5.0);
}

TEST(Loader, EmptyInputGivesEmptyList) {
  std::istringstream in("");
  EXPECT_TRUE(parse_dataset(in, DatasetFormat::ml100k).empty());
}

TEST(Loader, Ml1mDoubleColonSeparator) {
  std::istringstream in("1::1193::5::978300760\n1::661::3::978302109\n");
  const auto xs = parse_dataset(in, DatasetFormat::ml1m);
  ASSERT_EQ(xs.size(), 2u);
  EXPECT_EQ(xs[1].item, "661");
}

TEST(Loader, AmazonCsvWithHeader) {
  std::istringstream in("user,item,rating,timestamp\nA1,B7,5.0,100\nA2,B7,4.0,101\n");
  const auto xs = parse_dataset(in, DatasetFormat::amazon_csv);
  ASSERT_EQ(xs.size(), 2u);
  EXPECT_EQ(xs[0].user, "A1");
  EXPECT_EQ(xs[0].item, "B7");
}

TEST(Loader, DuplicatesKeepLatestTimestamp) {
  std::istringstream in("1\t10\t4\t200\n1\t10\t2\t300\n1\t10\t5\t100\n");
  const auto xs = parse_dataset(in, DatasetFormat::ml100k);
  ASSERT_EQ(xs.size(), 1u);
  EXPECT_EQ(xs[0].rating, 2.0);
}

TEST(Loader, MalformedLineReportsLineNumber) {
  std::istringstream in("1\t10\t4\t200\n1\t10\tx\t300\n");
  try {
    parse_dataset(in, DatasetFormat::ml100k, "fixture.data");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fixture.data:2"), std::string::npos) << e.what();
  }
}

TEST(Loader, UnknownFormatIsConfigError) {
  EXPECT_THROW(parse_dataset_format("netflix"), ConfigError);
}

TEST(Loader, MissingFileNamesPath) {
  try {
    load_dataset("/nonexistent/u.data", DatasetFormat::ml100k);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/u.data"), std::string::npos);
  }
}

TEST(Filter, ZeroThresholdsIsIdentityModuloReindexing) {
  std::vector<RawInteraction> raw{{"5", "9", 3, 1}, {"2", "9", 4, 2}, {"5", "1", 1, 3}};
  const auto ds = filter_dataset(raw, 0, 0);
  EXPECT_EQ(ds.matrix.num_users(), 2u);
  EXPECT_EQ(ds.matrix.num_items(), 2u);
  EXPECT_EQ(ds.matrix.num_ratings(), 3u);
  EXPECT_EQ(ds.ids.users, (std::vector<std::string>{"2", "5"}));
  EXPECT_EQ(ds.ids.items, (std::vector<std::string>{"1", "9"}));
}

TEST(Filter, CascadesToFixpoint) {
  // Item c has one rating; removing it drops user z below 2, which then
  // drops item b below 2.
  std::vector<RawInteraction> raw{{"x", "a", 1, 1}, {"y", "a", 1, 1}, {"z", "a", 1, 1},
                                  {"x", "b", 1, 1}, {"z", "b", 1, 1}, {"z", "c", 1, 1},
                                  {"y", "d", 1, 1}, {"x", "d", 1, 1}};
  // min_user=2, min_item=2: c removed -> z has {a,b} still 2 -> stable.
  auto ds = filter_dataset(raw, 2, 2);
  EXPECT_EQ(ds.matrix.num_items(), 3u);
  EXPECT_EQ(ds.matrix.num_users(), 3u);
  // min_user=3: z survives only with c, which is removed -> z gone -> b has
  // 1 rating -> b gone -> x drops to 2 -> x gone -> cascade empties data.
  EXPECT_THROW(filter_dataset(raw, 3, 2), DataError);
}

TEST(Filter, EverythingFilteredIsExplicitError) {
  std::vector<RawInteraction> raw{{"x", "a", 1, 1}};
  EXPECT_THROW(filter_dataset(raw, 2, 0), DataError);
}

TEST(RatingMatrixTest, DualityAndDensity) {
  const auto m = matrix_of(3, 4, {{0, 1, 5, 1}, {2, 3, 1, 2}, {1, 1, 2, 3}, {0, 0, 4, 4}});
  auto a = m.interactions();
  auto b = m.interactions_by_item();
  auto key = [](const Interaction& x) { return std::tuple(x.user, x.item, x.rating, x.timestamp); };
  std::set<decltype(key(a[0]))> sa, sb;
  for (auto& x : a) sa.insert(key(x));
  for (auto& x : b) sb.insert(key(x));
  EXPECT_EQ(sa, sb);
  EXPECT_NEAR(m.density(), 4.0 / 12.0, 1e-12);
  EXPECT_EQ(m.max_rating(0), 5.0);
  EXPECT_THROW(m.user_row(3), IndexError);
}

TEST(Split, LatestHeldOut) {
  const auto m = matrix_of(1, 3, {{0, 0, 3, 1}, {0, 1, 4, 2}, {0, 2, 5, 3}});
  const auto s = leave_one_out_split(m);
  ASSERT_TRUE(s.test[0].has_value());
  EXPECT_EQ(s.test[0]->item, 2u);
  EXPECT_EQ(s.train.num_ratings(), 2u);
  EXPECT_EQ(s.user_max_rating[0], 4.0);
}

TEST(Split, SingleInteractionUserStaysInTrain) {
  const auto m = matrix_of(2, 2, {{0, 0, 3, 1}, {1, 0, 4, 2}, {1, 1, 5, 3}});
  const auto s = leave_one_out_split(m);
  EXPECT_FALSE(s.test[0].has_value());
  EXPECT_EQ(s.train.user_count(0), 1u);
  EXPECT_EQ(s.num_test(), 1u);
}

TEST(Split, TimestampTieHoldsOutLargerItem) {
  const auto m = matrix_of(1, 5, {{0, 4, 3, 7}, {0, 1, 4, 7}, {0, 3, 5, 2}});
  const auto s = leave_one_out_split(m);
  EXPECT_EQ(s.test[0]->item, 4u);
}

TEST(Split, SoundnessAndRoundTrip) {
  std::vector<Interaction> xs;
  for (std::uint32_t u = 0; u < 6; ++u) {
    for (std::uint32_t i = 0; i < 8; ++i) {
      if ((u * 3 + i) % 4 != 0) xs.push_back({u, i, double(1 + (u + i) % 5), (u * 31 + i * 7) % 11});
    }
  }
  const auto m = matrix_of(6, 8, xs);
  const auto s = leave_one_out_split(m);
  std::size_t tests = 0;
  for (std::uint32_t u = 0; u < 6; ++u) {
    if (!s.test[u]) continue;
    ++tests;
    EXPECT_FALSE(s.train.contains(u, s.test[u]->item));
  }
  EXPECT_EQ(s.train.num_ratings() + tests, m.num_ratings());
  EXPECT_EQ(s.full_matrix().interactions(), m.interactions());

  const auto path = temp_path("split.txt");
  write_split(path, s);
  const auto back = read_split(path);
  EXPECT_EQ(back.train.interactions(), s.train.interactions());
  EXPECT_EQ(back.test, s.test);
  EXPECT_EQ(back.user_max_rating, s.user_max_rating);
  fs::remove(path);
}

TEST(Split, ReadRejectsBadMagicAndTruncation) {
  const auto path = temp_path("bad_split.txt");
  {
    std::ofstream(path) << "NOT-A-SPLIT 1\n";
  }
  EXPECT_THROW(read_split(path), FormatError);
  {
    std::ofstream(path) << "JNCF-SPLIT 1\nusers 2 items 2 rating_min 1 rating_max 5 train 3 test 0\n0 0 1 1\n";
  }
  EXPECT_THROW(read_split(path), FormatError);
  fs::remove(path);
}

TEST(InputVectors, ExplicitAndImplicit) {
  const auto m = matrix_of(2, 4, {{0, 2, 4, 1}, {1, 0, 2, 1}, {1, 2, 5, 2}});
  EXPECT_EQ(to_dense(build_user_vector(m, 0), 4), (std::vector<double>{0, 0, 4, 0}));
  EXPECT_EQ(to_dense(build_user_vector(m, 0, FeedbackMode::implicit), 4),
            (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(to_dense(build_item_vector(m, 2), 2), (std::vector<double>{4, 5}));
  const auto empty = matrix_of(2, 4, {{1, 0, 2, 1}});
  EXPECT_EQ(to_dense(build_user_vector(empty, 0), 4), (std::vector<double>(4, 0.0)));
  EXPECT_THROW(build_user_vector(m, 2), IndexError);
}

TEST(Sparsify, IdentityAtCurrentCount) {
  const auto m = matrix_of(2, 2, {{0, 0, 1, 1}, {0, 1, 2, 1}, {1, 1, 3, 1}});
  EXPECT_EQ(sparsify(m, 3, 1).interactions(), m.interactions());
  EXPECT_THROW(sparsify(m, 4, 1), DataError);
}

TEST(Sparsify, ThreeByThreeToyMatchesEnumeration) {
  // 5 ratings on a 3x3 grid; exactly the removals that keep every row and
  // column nonempty are admissible.
  const std::vector<Interaction> xs{{0, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 1, 1}, {1, 2, 1, 1},
                                    {2, 0, 1, 1}};
  const auto m = matrix_of(3, 3, xs);
  std::set<std::pair<std::uint32_t, std::uint32_t>> admissible;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::vector<int> rows(3, 0), cols(3, 0);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == k) continue;
      ++rows[xs[j].user];
      ++cols[xs[j].item];
    }
    if (*std::min_element(rows.begin(), rows.end()) > 0 &&
        *std::min_element(cols.begin(), cols.end()) > 0) {
      admissible.insert({xs[k].user, xs[k].item});
    }
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sparsify(m, 4, seed);
    ASSERT_EQ(s.num_ratings(), 4u);
    for (std::uint32_t u = 0; u < 3; ++u) ASSERT_GT(s.user_count(u), 0u);
    for (std::uint32_t i = 0; i < 3; ++i) ASSERT_GT(s.item_count(i), 0u);
    for (const auto& x : xs) {
      if (!s.contains(x.user, x.item)) seen.insert({x.user, x.item});
    }
  }
  EXPECT_EQ(seen, admissible);
}

TEST(Sparsify, UnreachableTargetIsError) {
  const auto m = matrix_of(2, 2, {{0, 0, 1, 1}, {1, 1, 1, 1}});
  EXPECT_THROW(sparsify(m, 1, 3), DataError);
}

TEST(Cohort, CountsOneToTenAtThirtyPercent) {
  std::vector<Interaction> xs;
  // user u has u+1 ratings, listed in scrambled user order
  for (std::uint32_t u : {4u, 9u, 0u, 7u, 2u, 5u, 1u, 8u, 3u, 6u}) {
    for (std::uint32_t i = 0; i <= u; ++i) xs.push_back({u, i, 1, 1});
  }
  const auto m = matrix_of(10, 10, xs);
  EXPECT_EQ(activity_cohort(m, 0.3), (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_EQ(activity_cohort(m, 1.0).size(), 10u);
  EXPECT_THROW(activity_cohort(m, 0.0), ConfigError);
}

TEST(EvalNegatives, ForcedSetAndDeterminism) {
  // user 0 rated items 0..6 in train, test item 7; items 8, 9, 10 remain.
  std::vector<Interaction> xs;
  for (std::uint32_t i = 0; i < 7; ++i) xs.push_back({0, i, 1, 1});
  const auto train = matrix_of(1, 11, xs);
  const std::optional<Interaction> test = Interaction{0, 7, 1, 2};
  auto neg = sample_eval_negatives(train, test, 0, 3, 99);
  std::sort(neg.begin(), neg.end());
  EXPECT_EQ(neg, (std::vector<std::uint32_t>{8, 9, 10}));
  EXPECT_THROW(sample_eval_negatives(train, test, 0, 4, 99), DataError);

  std::vector<Interaction> ys;
  for (std::uint32_t i = 0; i < 50; i += 3) ys.push_back({0, i, 1, 1});
  const auto big = matrix_of(1, 400, ys);
  const std::optional<Interaction> t2 = Interaction{0, 1, 1, 2};
  const auto a = sample_eval_negatives(big, t2, 0, 100, 5);
  EXPECT_EQ(a, sample_eval_negatives(big, t2, 0, 100, 5));
  EXPECT_EQ(std::set<std::uint32_t>(a.begin(), a.end()).size(), 100u);
  for (auto j : a) {
    EXPECT_FALSE(big.contains(0, j));
    EXPECT_NE(j, 1u);
  }
}

class Ml100k : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!fs::exists(JNCF_ML100K_PATH)) GTEST_SKIP() << "ML100K not found at " << JNCF_ML100K_PATH;
  }
};

TEST_F(Ml100k, DatasetStatistics) {
  const auto raw = load_dataset(JNCF_ML100K_PATH, DatasetFormat::ml100k);
  EXPECT_EQ(raw.size(), 100000u);
  const auto ds = filter_dataset(raw, 0, 0);
  EXPECT_EQ(ds.matrix.num_users(), 943u);
  EXPECT_EQ(ds.matrix.num_items(), 1682u);
  EXPECT_NEAR(ds.matrix.density() * 100.0, 6.3047, 5e-5);
  const auto split = leave_one_out_split(ds.matrix);
  EXPECT_EQ(split.num_test(), 943u);
  EXPECT_EQ(activity_cohort(split.train, 0.1).size(), 95u);
  const auto neg = sample_eval_negatives(split.train, split.test[0], 0, 100, 1);
  EXPECT_EQ(std::set<std::uint32_t>(neg.begin(), neg.end()).size(), 100u);
}

TEST_F(Ml100k, SparsifyHitsDensityTarget) {
  const auto ds = filter_dataset(load_dataset(JNCF_ML100K_PATH, DatasetFormat::ml100k), 0, 0);
  const auto s = sparsify(ds.matrix, 69999, 1);
  EXPECT_EQ(s.num_ratings(), 69999u);
  EXPECT_EQ(s.num_users(), 943u);
  EXPECT_EQ(s.num_items(), 1682u);
  for (std::uint32_t u = 0; u < 943; ++u) ASSERT_GT(s.user_count(u), 0u);
  for (std::uint32_t i = 0; i < 1682; ++i) ASSERT_GT(s.item_count(i), 0u);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", s.density() * 100.0);
  EXPECT_STREQ(buf, "4.4132");
}

}  // namespace
