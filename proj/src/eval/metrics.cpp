#include "jncf/eval/metrics.hpp"

#include <cmath>

#include "jncf/core/errors.hpp"

namespace jncf {

std::size_t rank_of_positive(double positive_score, std::uint32_t positive_item,
                             std::span<const double> negative_scores,
                             std::span<const std::uint32_t> negative_items) {
  if (negative_scores.size() != negative_items.size()) {
    throw ShapeError("rank_of_positive: " + std::to_string(negative_scores.size()) +
                     " scores for " + std::to_string(negative_items.size()) + " items");
  }
  std::size_t rank = 1;
  for (std::size_t k = 0; k < negative_scores.size(); ++k) {
    const double s = negative_scores[k];
    if (s > positive_score || (s == positive_score && negative_items[k] < positive_item)) ++rank;
  }
  return rank;
}

double hr_at_n(std::size_t rank, std::size_t n) { return rank >= 1 && rank <= n ? 1.0 : 0.0; }

double ndcg_at_n(std::size_t rank, std::size_t n) {
  if (rank < 1 || rank > n) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

}  // namespace jncf
