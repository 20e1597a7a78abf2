#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace jncf {

// 1-based rank of the positive among itself and its negatives: one plus the
// number of negatives scoring higher, plus tied negatives with a smaller
// item id.
std::size_t rank_of_positive(double positive_score, std::uint32_t positive_item,
                             std::span<const double> negative_scores,
                             std::span<const std::uint32_t> negative_items);

double hr_at_n(std::size_t rank, std::size_t n);
// 1 / log2(rank + 1) when rank <= n, else 0.
double ndcg_at_n(std::size_t rank, std::size_t n);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace jncf
