#include "jncf/data/rating_matrix.hpp"

#include <algorithm>
#include <string>

#include "jncf/core/errors.hpp"

namespace jncf {

RatingMatrix RatingMatrix::from_interactions(std::size_t num_users, std::size_t num_items,
                                             std::span<const Interaction> interactions) {
  // Stable sort by (user, item) then keep the last occurrence with the
  // greatest timestamp.
  std::vector<std::size_t> order(interactions.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = interactions[a];
    const auto& y = interactions[b];
    return x.user != y.user ? x.user < y.user : x.item < y.item;
  });

  RatingMatrix m;
  m.num_users_ = num_users;
  m.num_items_ = num_items;
  std::vector<Interaction> unique;
  unique.reserve(interactions.size());
  for (std::size_t k : order) {
    const Interaction& it = interactions[k];
    if (it.user >= num_users || it.item >= num_items) {
      throw IndexError("interaction (" + std::to_string(it.user) + ", " +
                       std::to_string(it.item) + ") outside a " + std::to_string(num_users) +
                       "x" + std::to_string(num_items) + " matrix");
    }
    if (!(it.rating > 0.0)) {
      throw DataError("interaction (" + std::to_string(it.user) + ", " + std::to_string(it.item) +
                      ") has non-positive rating");
    }
    if (!unique.empty() && unique.back().user == it.user && unique.back().item == it.item) {
      if (it.timestamp >= unique.back().timestamp) unique.back() = it;
      continue;
    }
    unique.push_back(it);
  }

  m.user_offsets_.assign(num_users + 1, 0);
  m.item_offsets_.assign(num_items + 1, 0);
  for (const auto& it : unique) {
    ++m.user_offsets_[it.user + 1];
    ++m.item_offsets_[it.item + 1];
  }
  for (std::size_t u = 0; u < num_users; ++u) m.user_offsets_[u + 1] += m.user_offsets_[u];
  for (std::size_t i = 0; i < num_items; ++i) m.item_offsets_[i + 1] += m.item_offsets_[i];

  m.by_user_.resize(unique.size());
  m.by_item_.resize(unique.size());
  std::vector<std::size_t> item_fill(m.item_offsets_.begin(), m.item_offsets_.end() - 1);
  // `unique` is user-major, item-ascending, so both orientations come out sorted.
  for (std::size_t k = 0; k < unique.size(); ++k) {
    const auto& it = unique[k];
    m.by_user_[k] = {it.item, it.rating, it.timestamp};
    m.by_item_[item_fill[it.item]++] = {it.user, it.rating, it.timestamp};
  }
  return m;
}

double RatingMatrix::density() const {
  if (num_users_ == 0 || num_items_ == 0) return 0.0;
  return static_cast<double>(num_ratings()) /
         (static_cast<double>(num_users_) * static_cast<double>(num_items_));
}

std::span<const RatingEntry> RatingMatrix::user_row(std::uint32_t user) const {
  if (user >= num_users_) {
    throw IndexError("user " + std::to_string(user) + " out of range (M=" +
                     std::to_string(num_users_) + ")");
  }
  return {by_user_.data() + user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]};
}

std::span<const RatingEntry> RatingMatrix::item_column(std::uint32_t item) const {
  if (item >= num_items_) {
    throw IndexError("item " + std::to_string(item) + " out of range (N=" +
                     std::to_string(num_items_) + ")");
  }
  return {by_item_.data() + item_offsets_[item], item_offsets_[item + 1] - item_offsets_[item]};
}

std::optional<double> RatingMatrix::rating(std::uint32_t user, std::uint32_t item) const {
  const auto row = user_row(user);
  const auto it = std::lower_bound(row.begin(), row.end(), item,
                                   [](const RatingEntry& e, std::uint32_t v) { return e.index < v; });
  if (it == row.end() || it->index != item) return std::nullopt;
  return it->rating;
}

bool RatingMatrix::contains(std::uint32_t user, std::uint32_t item) const {
  return rating(user, item).has_value();
}

double RatingMatrix::max_rating(std::uint32_t user) const {
  double best = 0.0;
  for (const auto& e : user_row(user)) best = std::max(best, e.rating);
  return best;
}

double RatingMatrix::min_rating_value() const {
  if (by_user_.empty()) return 0.0;
  double v = by_user_.front().rating;
  for (const auto& e : by_user_) v = std::min(v, e.rating);
  return v;
}

double RatingMatrix::max_rating_value() const {
  double v = 0.0;
  for (const auto& e : by_user_) v = std::max(v, e.rating);
  return v;
}

std::vector<Interaction> RatingMatrix::interactions() const {
  std::vector<Interaction> out;
  out.reserve(by_user_.size());
  for (std::uint32_t u = 0; u < num_users_; ++u) {
    for (const auto& e : user_row(u)) out.push_back({u, e.index, e.rating, e.timestamp});
  }
  return out;
}

std::vector<Interaction> RatingMatrix::interactions_by_item() const {
  std::vector<Interaction> out;
  out.reserve(by_item_.size());
  for (std::uint32_t i = 0; i < num_items_; ++i) {
    for (const auto& e : item_column(i)) out.push_back({e.index, i, e.rating, e.timestamp});
  }
  return out;
}

}  // namespace jncf
