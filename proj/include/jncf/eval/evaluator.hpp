#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jncf/data/rating_matrix.hpp"
#include "jncf/model/jncf_model.hpp"

namespace jncf {

// Anything that can score a batch of items for one user. Implementations must
// be safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual void score(std::uint32_t user, std::span<const std::uint32_t> items,
                     std::span<double> out) const = 0;
};

// J-NCF scorer over tower outputs precomputed from `input` (the matrix the
// model reads its rating vectors from).
class JncfScorer : public Scorer {
 public:
  JncfScorer(const JNCFModel& model, const RatingMatrix& input);
  void score(std::uint32_t user, std::span<const std::uint32_t> items,
             std::span<double> out) const override;

 private:
  const JNCFModel* model_;
  std::size_t width_;
  std::vector<double> user_features_;
  std::vector<double> item_features_;
};

struct RankedCandidates {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> candidates;  // held-out item first, then negatives
  std::vector<double> scores;
  std::size_t rank_of_test = 0;
};

struct EvalCase {
  std::uint32_t user = 0;
  std::uint32_t positive = 0;
  std::vector<std::uint32_t> negatives;
};

// Sampled candidates, built once and shared by every model in a comparison.
struct CandidateSet {
  std::vector<EvalCase> cases;  // ascending user id
  std::size_t num_negatives = 0;
  std::size_t skipped_users = 0;  // users without enough negatives
};

// One case per user with a held-out item. Negatives avoid the user's train
// row and the held-out item; they depend only on (seed, user).
CandidateSet build_candidates(const RatingMatrix& train,
                              const std::vector<std::optional<Interaction>>& held_out,
                              std::size_t num_negatives, std::uint64_t seed);

// Subset of `set` for the listed users (kept in ascending id order).
CandidateSet restrict_candidates(const CandidateSet& set, std::span<const std::uint32_t> users);

struct MetricAtN {
  std::size_t n = 0;
  double hr = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::string model = "jncf";
  std::string dataset;
  std::string cohort = "all";
  std::size_t users = 0;
  std::size_t skipped_users = 0;
  double total_seconds = 0.0;
  std::vector<MetricAtN> metrics;   // ascending N
  std::vector<std::size_t> ranks;   // per case, same order as the candidate set

  double mean_seconds_per_user() const;
  const MetricAtN& at(std::size_t n) const;
  double hr(std::size_t n) const { return at(n).hr; }
  double ndcg(std::size_t n) const { return at(n).ndcg; }
};

struct EvalOptions {
  std::vector<std::size_t> cutoffs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t threads = 1;
  bool keep_ranks = true;
};

RankedCandidates rank_case(const Scorer& scorer, const EvalCase& c);

EvalReport evaluate(const Scorer& scorer, const CandidateSet& set, const EvalOptions& options = {});

struct CohortReport {
  double percentile = 0.0;
  std::size_t cohort_users = 0;
  std::optional<EvalReport> report;  // empty when no cohort user has a case
};

// Cohorts of the ceil(p * M) least active users (by `train` counts).
std::vector<CohortReport> evaluate_cohorts(const Scorer& scorer, const RatingMatrix& train,
                                           const CandidateSet& set,
                                           std::span<const double> percentiles,
                                           const EvalOptions& options = {});

// CSV rows `model,dataset,cohort,N,hr,ndcg,users,seconds`.
void write_report_csv_header(std::ostream& out);
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace jncf
