#include "jncf/data/split.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "jncf/core/errors.hpp"
#include "jncf/core/random.hpp"

namespace jncf {

std::size_t SplitDataset::num_test() const {
  return static_cast<std::size_t>(
      std::count_if(test.begin(), test.end(), [](const auto& t) { return t.has_value(); }));
}

RatingMatrix SplitDataset::full_matrix() const {
  auto all = train.interactions();
  for (const auto& t : test)
    if (t) all.push_back(*t);
  return RatingMatrix::from_interactions(train.num_users(), train.num_items(), all);
}

SplitDataset leave_one_out_split(const RatingMatrix& matrix) {
  SplitDataset split;
  split.test.assign(matrix.num_users(), std::nullopt);
  std::vector<Interaction> kept;
  kept.reserve(matrix.num_ratings());
  for (std::uint32_t u = 0; u < matrix.num_users(); ++u) {
    const auto row = matrix.user_row(u);
    if (row.size() >= 2) {
      const auto latest = std::max_element(row.begin(), row.end(), [](const auto& a, const auto& b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.index < b.index;
      });
      split.test[u] = Interaction{u, latest->index, latest->rating, latest->timestamp};
    }
    for (const auto& e : row) {
      if (split.test[u] && split.test[u]->item == e.index) continue;
      kept.push_back({u, e.index, e.rating, e.timestamp});
    }
  }
  split.train = RatingMatrix::from_interactions(matrix.num_users(), matrix.num_items(), kept);
  split.user_max_rating.resize(matrix.num_users());
  for (std::uint32_t u = 0; u < matrix.num_users(); ++u) {
    split.user_max_rating[u] = split.train.max_rating(u);
  }
  return split;
}

namespace {

std::vector<SparseEntry> to_entries(std::span<const RatingEntry> row, FeedbackMode mode) {
  std::vector<SparseEntry> out;
  out.reserve(row.size());
  for (const auto& e : row) {
    out.push_back({e.index, mode == FeedbackMode::implicit ? 1.0 : e.rating});
  }
  return out;
}

}  // namespace

std::vector<SparseEntry> build_user_vector(const RatingMatrix& train, std::uint32_t user,
                                           FeedbackMode mode) {
  return to_entries(train.user_row(user), mode);
}

std::vector<SparseEntry> build_item_vector(const RatingMatrix& train, std::uint32_t item,
                                           FeedbackMode mode) {
  return to_entries(train.item_column(item), mode);
}

std::vector<double> to_dense(std::span<const SparseEntry> entries, std::size_t length) {
  std::vector<double> out(length, 0.0);
  for (const auto& e : entries) {
    if (e.index >= length) {
      throw IndexError("sparse index " + std::to_string(e.index) + " >= length " +
                       std::to_string(length));
    }
    out[e.index] = e.value;
  }
  return out;
}

RatingMatrix sparsify(const RatingMatrix& matrix, std::size_t target_ratings, std::uint64_t seed) {
  const std::size_t current = matrix.num_ratings();
  if (target_ratings > current) {
    throw DataError("sparsify: target " + std::to_string(target_ratings) +
                    " exceeds the current " + std::to_string(current) + " ratings");
  }
  auto records = matrix.interactions();
  if (target_ratings == current) return matrix;

  std::vector<std::size_t> ucount(matrix.num_users()), icount(matrix.num_items());
  for (const auto& r : records) {
    ++ucount[r.user];
    ++icount[r.item];
  }
  // Alive records are kept packed in `alive`; removal swaps with the back.
  std::vector<std::size_t> alive(records.size());
  for (std::size_t k = 0; k < alive.size(); ++k) alive[k] = k;
  Rng rng = make_rng(seed, SeedStream::sparsify);
  std::size_t rejections = 0;
  while (alive.size() > target_ratings) {
    std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
    const std::size_t slot = pick(rng);
    const auto& r = records[alive[slot]];
    if (ucount[r.user] > 1 && icount[r.item] > 1) {
      --ucount[r.user];
      --icount[r.item];
      alive[slot] = alive.back();
      alive.pop_back();
      rejections = 0;
      continue;
    }
    // After a run of rejections as long as the pool, confirm that some
    // removable record still exists before drawing again.
    if (++rejections >= alive.size()) {
      const bool any = std::any_of(alive.begin(), alive.end(), [&](std::size_t k) {
        return ucount[records[k].user] > 1 && icount[records[k].item] > 1;
      });
      if (!any) {
        throw DataError("sparsify: cannot reach " + std::to_string(target_ratings) +
                        " ratings without emptying a user or item (stuck at " +
                        std::to_string(alive.size()) + ")");
      }
      rejections = 0;
    }
  }
  std::sort(alive.begin(), alive.end());
  std::vector<Interaction> kept;
  kept.reserve(alive.size());
  for (std::size_t k : alive) kept.push_back(records[k]);
  return RatingMatrix::from_interactions(matrix.num_users(), matrix.num_items(), kept);
}

std::vector<std::uint32_t> activity_cohort(const RatingMatrix& train, double percentile) {
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw ConfigError("cohort percentile must be in (0, 1], got " + std::to_string(percentile));
  }
  const std::size_t m = train.num_users();
  std::vector<std::uint32_t> users(m);
  for (std::uint32_t u = 0; u < m; ++u) users[u] = u;
  std::stable_sort(users.begin(), users.end(), [&](std::uint32_t a, std::uint32_t b) {
    return train.user_count(a) < train.user_count(b);
  });
  // Guard against 0.1 * 943 = 94.30000000000001 style rounding.
  const double scaled = percentile * static_cast<double>(m);
  auto take = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
  take = std::min(take, m);
  users.resize(take);
  std::sort(users.begin(), users.end());
  return users;
}

std::vector<std::uint32_t> sample_eval_negatives(const RatingMatrix& train,
                                                 const std::optional<Interaction>& test,
                                                 std::uint32_t user, std::size_t k,
                                                 std::uint64_t seed) {
  const auto row = train.user_row(user);
  const std::size_t n = train.num_items();
  const bool test_in_row = test && train.contains(user, test->item);
  const std::size_t excluded = row.size() + ((test && !test_in_row) ? 1 : 0);
  const std::size_t available = n - excluded;
  if (available < k) {
    throw DataError("user " + std::to_string(user) + " has only " + std::to_string(available) +
                    " non-interacted items, " + std::to_string(k) + " negatives requested");
  }
  auto blocked = [&](std::uint32_t item) {
    if (test && test->item == item) return true;
    return std::binary_search(row.begin(), row.end(), RatingEntry{item, 0.0, 0},
                              [](const RatingEntry& a, const RatingEntry& b) {
                                return a.index < b.index;
                              });
  };
  Rng rng = make_rng(seed, SeedStream::eval_negatives, user);
  std::vector<std::uint32_t> out;
  out.reserve(k);
  if (k * 2 > available) {
    // Dense regime: enumerate candidates and take a random subset.
    std::vector<std::uint32_t> pool;
    pool.reserve(available);
    for (std::uint32_t i = 0; i < n; ++i)
      if (!blocked(i)) pool.push_back(i);
    std::shuffle(pool.begin(), pool.end(), rng);
    out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
  }
  std::unordered_set<std::uint32_t> chosen;
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  while (out.size() < k) {
    const std::uint32_t i = pick(rng);
    if (blocked(i) || !chosen.insert(i).second) continue;
    out.push_back(i);
  }
  return out;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_line(std::ostream& out, const Interaction& it) {
  out << it.user << ' ' << it.item << ' ' << format_number(it.rating) << ' ' << it.timestamp
      << '\n';
}

}  // namespace

void write_split(const std::filesystem::path& path, const SplitDataset& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write split file '" + path.string() + "'");
  const auto full = split.full_matrix();
  out << "JNCF-SPLIT 1\n";
  out << "users " << split.num_users() << " items " << split.num_items() << " rating_min "
      << format_number(full.min_rating_value()) << " rating_max "
      << format_number(full.max_rating_value()) << " train " << split.train.num_ratings()
      << " test " << split.num_test() << '\n';
  for (const auto& it : split.train.interactions()) write_line(out, it);
  for (const auto& t : split.test)
    if (t) write_line(out, *t);
  if (!out) throw DataError("write failed for split file '" + path.string() + "'");
}

SplitDataset read_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open split file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "JNCF-SPLIT 1") {
    throw FormatError("'" + path.string() + "' is not a version-1 split file (bad magic)");
  }
  std::size_t m = 0, n = 0, n_train = 0, n_test = 0;
  double rmin = 0, rmax = 0;
  {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
    std::istringstream hs(line);
    std::string k1, k2, k3, k4, k5, k6;
    if (!(hs >> k1 >> m >> k2 >> n >> k3 >> rmin >> k4 >> rmax >> k5 >> n_train >> k6 >> n_test) ||
        k1 != "users" || k2 != "items" || k3 != "rating_min" || k4 != "rating_max" ||
        k5 != "train" || k6 != "test") {
      throw FormatError(path.string() + ":2: malformed header '" + line + "'");
    }
  }
  auto read_block = [&](std::size_t count, std::size_t first_line) {
    std::vector<Interaction> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      if (!std::getline(in, line)) {
        throw FormatError(path.string() + ": truncated after line " +
                          std::to_string(first_line + k - 1));
      }
      std::istringstream ls(line);
      Interaction it;
      if (!(ls >> it.user >> it.item >> it.rating >> it.timestamp) || it.user >= m ||
          it.item >= n) {
        throw DataError(path.string() + ":" + std::to_string(first_line + k) +
                        ": malformed or out-of-range record");
      }
      out.push_back(it);
    }
    return out;
  };
  const auto train = read_block(n_train, 3);
  const auto test = read_block(n_test, 3 + n_train);

  SplitDataset split;
  split.train = RatingMatrix::from_interactions(m, n, train);
  split.test.assign(m, std::nullopt);
  for (const auto& t : test) {
    if (split.test[t.user]) throw DataError(path.string() + ": two test items for one user");
    split.test[t.user] = t;
  }
  split.user_max_rating.resize(m);
  for (std::uint32_t u = 0; u < m; ++u) split.user_max_rating[u] = split.train.max_rating(u);
  return split;
}

}  // namespace jncf
