#include "jncf/data/loader.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include "jncf/core/errors.hpp"

namespace jncf {

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "ml100k") return DatasetFormat::ml100k;
  if (name == "ml1m") return DatasetFormat::ml1m;
  if (name == "amazon_csv") return DatasetFormat::amazon_csv;
  throw ConfigError("unknown dataset format '" + std::string(name) +
                    "' (expected ml100k, ml1m or amazon_csv)");
}

std::string_view dataset_format_name(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::ml100k:
      return "ml100k";
    case DatasetFormat::ml1m:
      return "ml1m";
    case DatasetFormat::amazon_csv:
      return "amazon_csv";
  }
  return "?";
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_int64(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return true;
  // Some Amazon dumps write timestamps as floats ("1234567890.0").
  double d = 0.0;
  if (!parse_double(s, d)) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

}  // namespace

std::vector<RawInteraction> parse_dataset(std::istream& in, DatasetFormat format,
                                          const std::string& source_name) {
  const std::string_view sep = format == DatasetFormat::ml100k ? "\t"
                               : format == DatasetFormat::ml1m ? "::"
                                                               : ",";
  std::vector<RawInteraction> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    const auto fields = split_fields(view, sep);
    if (fields.size() != 4) {
      fail("expected 4 fields separated by '" + std::string(sep == "\t" ? "\\t" : sep) +
           "', found " + std::to_string(fields.size()));
    }
    RawInteraction r;
    r.user = std::string(trim(fields[0]));
    r.item = std::string(trim(fields[1]));
    const bool rating_ok = parse_double(fields[2], r.rating);
    const bool ts_ok = parse_int64(fields[3], r.timestamp);
    if (!rating_ok || !ts_ok) {
      if (format == DatasetFormat::amazon_csv && line_no == 1 && out.empty()) continue;  // header
      fail(!rating_ok ? "unparseable rating '" + std::string(fields[2]) + "'"
                      : "unparseable timestamp '" + std::string(fields[3]) + "'");
    }
    if (r.user.empty() || r.item.empty()) fail("empty user or item id");
    if (!(r.rating > 0.0)) fail("rating must be positive");

    std::string key = r.user;
    key.push_back('\x1f');
    key += r.item;
    auto [pos, inserted] = seen.try_emplace(std::move(key), out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else if (r.timestamp >= out[pos->second].timestamp) {
      out[pos->second] = std::move(r);
    }
  }
  return out;
}

std::vector<RawInteraction> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
  return parse_dataset(in, format, path.string());
}

namespace {

// Dense reindexing order for a set of raw keys.
std::vector<std::string> ordered_keys(std::vector<std::string> keys) {
  std::vector<std::int64_t> numeric(keys.size());
  bool all_numeric = true;
  for (std::size_t k = 0; k < keys.size() && all_numeric; ++k) {
    const auto& s = keys[k];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), numeric[k]);
    all_numeric = res.ec == std::errc() && res.ptr == s.data() + s.size();
  }
  if (all_numeric) {
    std::vector<std::size_t> idx(keys.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return numeric[a] < numeric[b]; });
    std::vector<std::string> out;
    out.reserve(keys.size());
    for (auto k : idx) out.push_back(std::move(keys[k]));
    return out;
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

Dataset filter_dataset(const std::vector<RawInteraction>& interactions, std::size_t min_user,
                       std::size_t min_item) {
  // Intern keys first so the fixpoint loop works on integers.
  std::unordered_map<std::string, std::uint32_t> user_ids, item_ids;
  std::vector<std::string> user_keys, item_keys;
  std::vector<std::uint32_t> us(interactions.size()), is(interactions.size());
  for (std::size_t k = 0; k < interactions.size(); ++k) {
    const auto& r = interactions[k];
    auto [u, u_new] = user_ids.try_emplace(r.user, static_cast<std::uint32_t>(user_keys.size()));
    if (u_new) user_keys.push_back(r.user);
    auto [i, i_new] = item_ids.try_emplace(r.item, static_cast<std::uint32_t>(item_keys.size()));
    if (i_new) item_keys.push_back(r.item);
    us[k] = u->second;
    is[k] = i->second;
  }

  std::vector<char> alive(interactions.size(), 1);
  std::vector<std::size_t> ucount(user_keys.size()), icount(item_keys.size());
  while (true) {
    std::fill(ucount.begin(), ucount.end(), 0);
    std::fill(icount.begin(), icount.end(), 0);
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (alive[k]) {
        ++ucount[us[k]];
        ++icount[is[k]];
      }
    }
    bool removed = false;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (alive[k] && (ucount[us[k]] < min_user || icount[is[k]] < min_item)) {
        alive[k] = 0;
        removed = true;
      }
    }
    if (!removed) break;
  }

  std::vector<std::string> kept_users, kept_items;
  for (std::size_t u = 0; u < user_keys.size(); ++u)
    if (ucount[u] > 0) kept_users.push_back(user_keys[u]);
  for (std::size_t i = 0; i < item_keys.size(); ++i)
    if (icount[i] > 0) kept_items.push_back(item_keys[i]);
  if (kept_users.empty() || kept_items.empty()) {
    throw DataError("empty dataset: all " + std::to_string(interactions.size()) +
                    " interactions were removed by filtering (min_user=" +
                    std::to_string(min_user) + ", min_item=" + std::to_string(min_item) + ")");
  }

  Dataset ds;
  ds.ids.users = ordered_keys(std::move(kept_users));
  ds.ids.items = ordered_keys(std::move(kept_items));
  std::vector<std::uint32_t> user_dense(user_keys.size()), item_dense(item_keys.size());
  {
    std::unordered_map<std::string, std::uint32_t> pos;
    for (std::uint32_t k = 0; k < ds.ids.users.size(); ++k) pos[ds.ids.users[k]] = k;
    for (std::size_t u = 0; u < user_keys.size(); ++u)
      if (ucount[u] > 0) user_dense[u] = pos.at(user_keys[u]);
    pos.clear();
    for (std::uint32_t k = 0; k < ds.ids.items.size(); ++k) pos[ds.ids.items[k]] = k;
    for (std::size_t i = 0; i < item_keys.size(); ++i)
      if (icount[i] > 0) item_dense[i] = pos.at(item_keys[i]);
  }

  std::vector<Interaction> dense;
  dense.reserve(interactions.size());
  for (std::size_t k = 0; k < interactions.size(); ++k) {
    if (!alive[k]) continue;
    dense.push_back({user_dense[us[k]], item_dense[is[k]], interactions[k].rating,
                     interactions[k].timestamp});
  }
  ds.matrix = RatingMatrix::from_interactions(ds.ids.users.size(), ds.ids.items.size(), dense);
  return ds;
}

void write_id_map_csv(const std::filesystem::path& path, const std::vector<std::string>& keys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "raw_id,index\n";
  for (std::size_t k = 0; k < keys.size(); ++k) out << keys[k] << ',' << k << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace jncf
