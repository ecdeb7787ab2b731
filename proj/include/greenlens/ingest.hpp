#pragma once

// Parsers for the MovieLens and Amazon rating dumps. Everything lands in
// one canonical CSV form.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "greenlens/error.hpp"
#include "greenlens/text.hpp"

namespace greenlens {

using Index = std::uint32_t;

struct Interaction {
  Index user = 0;
  Index item = 0;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct RatingScale {
  double min = 0.5;
  double max = 5.0;
  double step = 0.5;

  bool contains(double r) const { return r >= min && r <= max; }
};

// Dense, bijective mapping external id <-> [0, size). Indices are assigned
// in first-appearance order.
class IdIndex {
 public:
  Index intern(std::string_view id) {
    auto [it, inserted] = lookup_.try_emplace(std::string(id), static_cast<Index>(ids_.size()));
    if (inserted) ids_.emplace_back(id);
    return it->second;
  }

  std::optional<Index> find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& id(Index i) const { return ids_.at(i); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> lookup_;
};

struct InteractionDataset {
  std::vector<Interaction> interactions;
  IdIndex users;
  IdIndex items;
  RatingScale scale;

  std::size_t n_users() const { return users.size(); }
  std::size_t n_items() const { return items.size(); }
  std::size_t size() const { return interactions.size(); }
  bool empty() const { return interactions.empty(); }
};

// Re-indexes a subset of `source` so the new maps are dense over the users
// and items that actually occur in `kept`, in first-appearance order.
inline InteractionDataset reindex(const InteractionDataset& source, const std::vector<Interaction>& kept) {
  InteractionDataset out;
  out.scale = source.scale;
  out.interactions.reserve(kept.size());
  for (const auto& x : kept) {
    Interaction y = x;
    y.user = out.users.intern(source.users.id(x.user));
    y.item = out.items.intern(source.items.id(x.item));
    out.interactions.push_back(y);
  }
  return out;
}

enum class Format { ml100k_tsv, ml_dat, amazon_csv, canonical_csv };

inline Format parse_format(std::string_view name) {
  if (name == "ml100k_tsv") return Format::ml100k_tsv;
  if (name == "ml_dat") return Format::ml_dat;
  if (name == "amazon_csv") return Format::amazon_csv;
  if (name == "canonical_csv" || name == "csv") return Format::canonical_csv;
  throw DataError("unknown dataset format '" + std::string(name) +
                  "' (expected ml100k_tsv, ml_dat, amazon_csv or canonical_csv)");
}

inline RatingScale default_scale(Format f) {
  switch (f) {
    case Format::ml100k_tsv:
    case Format::amazon_csv:
      return {1.0, 5.0, 1.0};
    case Format::ml_dat:  // 1M uses whole stars, 10M half stars
    case Format::canonical_csv:
      return {0.5, 5.0, 0.5};
  }
  return {};
}

enum class Column { user, item, rating, timestamp };

// Role of each field, left to right. Three entries means no timestamp column.
struct ColumnOrder {
  std::vector<Column> fields{Column::user, Column::item, Column::rating, Column::timestamp};

  static ColumnOrder parse(const std::vector<std::string>& names) {
    ColumnOrder order;
    order.fields.clear();
    bool seen[4] = {false, false, false, false};
    for (const auto& n : names) {
      Column c;
      if (n == "user" || n == "user_id") c = Column::user;
      else if (n == "item" || n == "item_id") c = Column::item;
      else if (n == "rating") c = Column::rating;
      else if (n == "timestamp" || n == "ts") c = Column::timestamp;
      else throw DataError("unknown column '" + n + "' in column order");
      if (seen[static_cast<int>(c)]) throw DataError("column '" + n + "' repeated in column order");
      seen[static_cast<int>(c)] = true;
      order.fields.push_back(c);
    }
    if (!seen[0] || !seen[1] || !seen[2])
      throw DataError("column order must name user, item and rating");
    return order;
  }
};

struct ParseOptions {
  std::optional<ColumnOrder> column_order;  // amazon_csv only
  std::optional<RatingScale> scale;         // default depends on format
};

namespace detail {

inline std::string_view separator(Format f) {
  switch (f) {
    case Format::ml100k_tsv: return "\t";
    case Format::ml_dat: return "::";
    default: return ",";
  }
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace detail

inline InteractionDataset parse_interactions(std::istream& in, Format format, const ParseOptions& opts = {}) {
  InteractionDataset ds;
  ds.scale = opts.scale.value_or(default_scale(format));
  const ColumnOrder order =
      format == Format::amazon_csv && opts.column_order ? *opts.column_order : ColumnOrder{};
  const bool comma = format == Format::amazon_csv || format == Format::canonical_csv;
  const auto sep = detail::separator(format);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;

    std::vector<std::string> owned;
    std::vector<std::string_view> fields;
    if (comma) {
      owned = text::csv_split(line);
      for (const auto& f : owned) fields.emplace_back(f);
    } else {
      std::string_view lv = line;
      if (!lv.empty() && lv.back() == '\r') lv.remove_suffix(1);
      fields = text::split(lv, sep);
    }

    // Comma formats may omit a trailing timestamp column.
    const bool short_row = comma && fields.size() + 1 == order.fields.size() &&
                           order.fields.back() == Column::timestamp;
    if (fields.size() != order.fields.size() && !short_row) {
      throw DataError(detail::at_line(lineno) + "expected " + std::to_string(order.fields.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }

    std::string_view user, item, rating_text, ts_text;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      switch (order.fields[k]) {
        case Column::user: user = text::trim(fields[k]); break;
        case Column::item: item = text::trim(fields[k]); break;
        case Column::rating: rating_text = fields[k]; break;
        case Column::timestamp: ts_text = text::trim(fields[k]); break;
      }
    }

    const auto rating = text::parse_double(rating_text);
    if (!rating) {
      // A header line is only tolerated as the first line of CSV inputs.
      if (comma && lineno == 1) continue;
      throw DataError(detail::at_line(lineno) + "non-numeric rating '" + std::string(rating_text) + "'");
    }
    if (user.empty() || item.empty()) throw DataError(detail::at_line(lineno) + "empty user or item id");
    if (!ds.scale.contains(*rating)) {
      throw DataError(detail::at_line(lineno) + "rating " + text::shortest(*rating) + " outside scale [" +
                      text::shortest(ds.scale.min) + ", " + text::shortest(ds.scale.max) + "]");
    }
    Interaction x;
    x.user = ds.users.intern(user);
    x.item = ds.items.intern(item);
    x.rating = *rating;
    if (!ts_text.empty()) {
      const auto ts = text::parse_int(ts_text);
      if (!ts) throw DataError(detail::at_line(lineno) + "malformed timestamp '" + std::string(ts_text) + "'");
      if (*ts < 0) throw DataError(detail::at_line(lineno) + "negative timestamp");
      x.timestamp = *ts;
    }
    ds.interactions.push_back(x);
  }
  return ds;
}

inline InteractionDataset parse_interactions(const std::string& path, Format format, const ParseOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  return parse_interactions(in, format, opts);
}

inline void write_canonical_csv(std::ostream& out, const InteractionDataset& ds) {
  out << "user_id,item_id,rating,timestamp\n";
  for (const auto& x : ds.interactions) {
    out << text::csv_escape(ds.users.id(x.user)) << ',' << text::csv_escape(ds.items.id(x.item)) << ','
        << text::shortest(x.rating) << ',';
    if (x.timestamp) out << *x.timestamp;
    out << '\n';
  }
}

inline std::string canonical_csv(const InteractionDataset& ds) {
  std::ostringstream os;
  write_canonical_csv(os, ds);
  return os.str();
}

inline void write_canonical_csv(const std::string& path, const InteractionDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_canonical_csv(out, ds);
  if (!out) throw RuntimeError("write failed for '" + path + "'");
}

struct StatsRow {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  std::size_t avg_int_per_user = 0;  // truncated, not rounded
  std::size_t avg_int_per_item = 0;

  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const StatsRow& s) {
  return os << '(' << s.n_users << ", " << s.n_items << ", " << s.n_interactions << ", " << s.avg_int_per_user
            << ", " << s.avg_int_per_item << ')';
}

inline StatsRow dataset_stats(const InteractionDataset& ds) {
  if (ds.empty() || ds.n_users() == 0 || ds.n_items() == 0)
    throw DataError("cannot compute statistics of an empty dataset");
  StatsRow s;
  s.n_users = ds.n_users();
  s.n_items = ds.n_items();
  s.n_interactions = ds.size();
  s.avg_int_per_user = s.n_interactions / s.n_users;
  s.avg_int_per_item = s.n_interactions / s.n_items;
  return s;
}

}  // namespace greenlens
