#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "jncf/data/interaction.hpp"
#include "jncf/data/rating_matrix.hpp"

namespace jncf {

// ml100k: "user \t item \t rating \t timestamp" (u.data)
// ml1m:   "UserID::MovieID::Rating::Timestamp" (ratings.dat)
// amazon_csv: "user,item,rating,timestamp", optional header line
enum class DatasetFormat { ml100k, ml1m, amazon_csv };

DatasetFormat parse_dataset_format(std::string_view name);
std::string_view dataset_format_name(DatasetFormat format);

// Original ids are kept as strings. Duplicate (user, item) pairs keep the
// latest timestamp. Malformed lines raise DataError("<source>:<line>: ...").
std::vector<RawInteraction> parse_dataset(std::istream& in, DatasetFormat format,
                                          const std::string& source_name = "<stream>");
std::vector<RawInteraction> load_dataset(const std::filesystem::path& path, DatasetFormat format);

// Dense index -> original key.
struct IdMap {
  std::vector<std::string> users;
  std::vector<std::string> items;
};

struct Dataset {
  RatingMatrix matrix;
  IdMap ids;
};

// Drops users with fewer than min_user and items with fewer than min_item
// ratings, repeated until no more removals happen, then reindexes densely
// (numeric order when every key is an integer, lexicographic otherwise).
// Throws DataError when nothing survives.
Dataset filter_dataset(const std::vector<RawInteraction>& interactions, std::size_t min_user,
                       std::size_t min_item);

// Two-column CSV "raw_id,dense_index".
void write_id_map_csv(const std::filesystem::path& path, const std::vector<std::string>& keys);

}  // namespace jncf
