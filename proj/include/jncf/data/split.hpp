#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jncf/core/layer.hpp"
#include "jncf/data/rating_matrix.hpp"

namespace jncf {

// Leave-one-out split: per user, the latest interaction is held out.
struct SplitDataset {
  RatingMatrix train;
  std::vector<std::optional<Interaction>> test;  // indexed by user
  std::vector<double> user_max_rating;           // Max(R_u) over train

  std::size_t num_users() const { return train.num_users(); }
  std::size_t num_items() const { return train.num_items(); }
  std::size_t num_test() const;
  // train + test merged back into one matrix.
  RatingMatrix full_matrix() const;
};

// Holds out the interaction with the greatest timestamp (ties: larger item
// id) for every user with >= 2 interactions; single-interaction users keep
// everything in train.
SplitDataset leave_one_out_split(const RatingMatrix& matrix);

enum class FeedbackMode { explicit_ratings, implicit };

// Tower input rows built from train only: user u -> length-N vector
// with R_uj at rated items; item i -> length-M vector. Implicit mode maps
// every stored rating to 1.
std::vector<SparseEntry> build_user_vector(const RatingMatrix& train, std::uint32_t user,
                                           FeedbackMode mode = FeedbackMode::explicit_ratings);
std::vector<SparseEntry> build_item_vector(const RatingMatrix& train, std::uint32_t item,
                                           FeedbackMode mode = FeedbackMode::explicit_ratings);
std::vector<double> to_dense(std::span<const SparseEntry> entries, std::size_t length);

// Removes uniformly drawn ratings, rejecting any whose removal would empty a
// user row or item column, until `target_ratings` remain. Throws DataError
// when the target is above the current count or cannot be reached.
RatingMatrix sparsify(const RatingMatrix& matrix, std::size_t target_ratings,
                      std::uint64_t seed);

// Users sorted by ascending train count (ties by id); the first
// ceil(percentile * M) are returned, sorted by id.
std::vector<std::uint32_t> activity_cohort(const RatingMatrix& train, double percentile);

// k distinct items that are neither in u's train row nor u's test item,
// drawn uniformly without replacement. Depends only on (seed, u), so users
// can be sampled in any order or in parallel.
std::vector<std::uint32_t> sample_eval_negatives(const RatingMatrix& train,
                                                 const std::optional<Interaction>& test,
                                                 std::uint32_t user, std::size_t k,
                                                 std::uint64_t seed);

// Prepared-split file (line oriented, UTF-8):
//   JNCF-SPLIT 1
//   users <M> items <N> rating_min <a> rating_max <b> train <T> test <K>
//   T lines "<u> <i> <rating> <timestamp>"   (train, user-major)
//   K lines "<u> <i> <rating> <timestamp>"   (test, by user)
void write_split(const std::filesystem::path& path, const SplitDataset& split);
SplitDataset read_split(const std::filesystem::path& path);

}  // namespace jncf
