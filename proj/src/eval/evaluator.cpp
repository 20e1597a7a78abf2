#include "jncf/eval/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <thread>

#include "jncf/core/errors.hpp"
#include "jncf/data/split.hpp"
#include "jncf/eval/metrics.hpp"

namespace jncf {

JncfScorer::JncfScorer(const JNCFModel& model, const RatingMatrix& input)
    : model_(&model),
      width_(model.feature_width()),
      user_features_(model.all_user_features(input)),
      item_features_(model.all_item_features(input)) {}

void JncfScorer::score(std::uint32_t user, std::span<const std::uint32_t> items,
                       std::span<double> out) const {
  if (user >= model_->num_users()) {
    throw IndexError("user " + std::to_string(user) + " out of range [0, " +
                     std::to_string(model_->num_users()) + ")");
  }
  const std::span<const double> zu(user_features_.data() + user * width_, width_);
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k] >= model_->num_items()) {
      throw IndexError("item " + std::to_string(items[k]) + " out of range [0, " +
                       std::to_string(model_->num_items()) + ")");
    }
    const std::span<const double> zi(item_features_.data() + items[k] * width_, width_);
    out[k] = model_->score_features(zu, zi);
  }
}

CandidateSet build_candidates(const RatingMatrix& train,
                              const std::vector<std::optional<Interaction>>& held_out,
                              std::size_t num_negatives, std::uint64_t seed) {
  if (held_out.size() != train.num_users()) {
    throw ShapeError("build_candidates: " + std::to_string(held_out.size()) +
                     " held-out slots for " + std::to_string(train.num_users()) + " users");
  }
  CandidateSet set;
  set.num_negatives = num_negatives;
  for (std::uint32_t u = 0; u < held_out.size(); ++u) {
    if (!held_out[u]) continue;
    EvalCase c;
    c.user = u;
    c.positive = held_out[u]->item;
    try {
      c.negatives = sample_eval_negatives(train, held_out[u], u, num_negatives, seed);
    } catch (const DataError&) {
      ++set.skipped_users;
      continue;
    }
    set.cases.push_back(std::move(c));
  }
  return set;
}

CandidateSet restrict_candidates(const CandidateSet& set, std::span<const std::uint32_t> users) {
  std::vector<std::uint32_t> sorted(users.begin(), users.end());
  std::sort(sorted.begin(), sorted.end());
  CandidateSet out;
  out.num_negatives = set.num_negatives;
  for (const auto& c : set.cases) {
    if (std::binary_search(sorted.begin(), sorted.end(), c.user)) out.cases.push_back(c);
  }
  return out;
}

double EvalReport::mean_seconds_per_user() const {
  return users == 0 ? 0.0 : total_seconds / static_cast<double>(users);
}

const MetricAtN& EvalReport::at(std::size_t n) const {
  for (const auto& m : metrics) {
    if (m.n == n) return m;
  }
  throw IndexError("report has no metrics at N=" + std::to_string(n));
}

RankedCandidates rank_case(const Scorer& scorer, const EvalCase& c) {
  RankedCandidates r;
  r.user = c.user;
  r.candidates.reserve(c.negatives.size() + 1);
  r.candidates.push_back(c.positive);
  r.candidates.insert(r.candidates.end(), c.negatives.begin(), c.negatives.end());
  r.scores.resize(r.candidates.size());
  scorer.score(c.user, r.candidates, r.scores);
  r.rank_of_test = rank_of_positive(r.scores[0], c.positive, std::span(r.scores).subspan(1),
                                    std::span<const std::uint32_t>(r.candidates).subspan(1));
  return r;
}

EvalReport evaluate(const Scorer& scorer, const CandidateSet& set, const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> ranks(set.cases.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) ranks[k] = rank_case(scorer, set.cases[k]).rank_of_test;
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, ranks.size()));
  if (threads <= 1) {
    work(0, ranks.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (ranks.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(ranks.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  const auto stop = std::chrono::steady_clock::now();

  EvalReport report;
  report.users = ranks.size();
  report.skipped_users = set.skipped_users;
  report.total_seconds = std::chrono::duration<double>(stop - start).count();
  std::vector<std::size_t> cutoffs = options.cutoffs;
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  for (std::size_t n : cutoffs) {
    if (n == 0) throw ConfigError("eval.cutoffs: N must be >= 1");
    CompensatedSum hr, ndcg;
    for (std::size_t r : ranks) {
      hr.add(hr_at_n(r, n));
      ndcg.add(ndcg_at_n(r, n));
    }
    const double count = ranks.empty() ? 1.0 : static_cast<double>(ranks.size());
    report.metrics.push_back({n, hr.value() / count, ndcg.value() / count});
  }
  if (options.keep_ranks) report.ranks = std::move(ranks);
  return report;
}

std::vector<CohortReport> evaluate_cohorts(const Scorer& scorer, const RatingMatrix& train,
                                           const CandidateSet& set,
                                           std::span<const double> percentiles,
                                           const EvalOptions& options) {
  std::vector<CohortReport> out;
  for (double p : percentiles) {
    CohortReport c;
    c.percentile = p;
    const auto users = activity_cohort(train, p);
    c.cohort_users = users.size();
    const auto subset = restrict_candidates(set, users);
    if (!subset.cases.empty()) {
      c.report = evaluate(scorer, subset, options);
      char label[32];
      std::snprintf(label, sizeof label, "bottom%g%%", p * 100.0);
      c.report->cohort = label;
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_report_csv_header(std::ostream& out) {
  out << "model,dataset,cohort,N,hr,ndcg,users,seconds\n";
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  char buf[64];
  for (const auto& m : report.metrics) {
    out << report.model << ',' << report.dataset << ',' << report.cohort << ',' << m.n << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", m.hr, m.ndcg);
    out << buf << ',' << report.users << ',';
    std::snprintf(buf, sizeof buf, "%.6f", report.total_seconds);
    out << buf << '\n';
  }
}

}  // namespace jncf
