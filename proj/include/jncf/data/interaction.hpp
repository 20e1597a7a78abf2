#pragma once

#include <cstdint>
#include <string>

namespace jncf {

// One event as read from a dataset file, before reindexing.
struct RawInteraction {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

// One event over dense user/item indices.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

}  // namespace jncf
