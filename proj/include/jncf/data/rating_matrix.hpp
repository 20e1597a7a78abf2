#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jncf/data/interaction.hpp"

namespace jncf {

// One stored rating seen from a row: `index` is the item (in a user row) or
// the user (in an item column).
struct RatingEntry {
  std::uint32_t index = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

// Immutable sparse M x N rating matrix kept in both orientations (CSR by
// user and CSR by item), each row sorted by index.
class RatingMatrix {
 public:
  RatingMatrix() = default;

  // Duplicate (user, item) pairs keep the latest timestamp (later position
  // wins on equal timestamps). Ratings must be > 0 and indices in range.
  static RatingMatrix from_interactions(std::size_t num_users, std::size_t num_items,
                                        std::span<const Interaction> interactions);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_ratings() const { return by_user_.size(); }
  double density() const;

  std::span<const RatingEntry> user_row(std::uint32_t user) const;
  std::span<const RatingEntry> item_column(std::uint32_t item) const;
  std::size_t user_count(std::uint32_t user) const { return user_row(user).size(); }
  std::size_t item_count(std::uint32_t item) const { return item_column(item).size(); }

  bool contains(std::uint32_t user, std::uint32_t item) const;
  std::optional<double> rating(std::uint32_t user, std::uint32_t item) const;
  // Max(R_u); 0 for a user with no ratings.
  double max_rating(std::uint32_t user) const;
  double min_rating_value() const;
  double max_rating_value() const;

  // All triples in user-major, item-ascending order.
  std::vector<Interaction> interactions() const;
  // Same triples reconstructed from the item orientation (item-major order).
  std::vector<Interaction> interactions_by_item() const;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<RatingEntry> by_user_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<RatingEntry> by_item_;
};

}  // namespace jncf
