#include "tmcsim/tmc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "tmcsim/error.hpp"

namespace tmcsim {

using namespace std::chrono;

std::string_view to_string(Turn t) {
  switch (t) {
    case Turn::left: return "left";
    case Turn::through: return "through";
    case Turn::right: return "right";
  }
  return "?";
}

std::string_view to_string(VehicleClass v) {
  switch (v) {
    case VehicleClass::car: return "car";
    case VehicleClass::truck: return "truck";
    case VehicleClass::bus: return "bus";
  }
  return "?";
}

std::optional<Turn> turn_from_string(std::string_view text) {
  for (auto t : kAllTurns) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::optional<VehicleClass> vehicle_class_from_string(std::string_view text) {
  for (auto v : kAllVehicleClasses) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

MovementKey MovementKey::from_index(int index) {
  return {static_cast<Cardinal>(index / 9), static_cast<Turn>((index / 3) % 3),
          static_cast<VehicleClass>(index % 3)};
}

std::array<MovementKey, kMovementKeyCount> all_movement_keys() {
  std::array<MovementKey, kMovementKeyCount> keys;
  for (int i = 0; i < kMovementKeyCount; ++i) keys[i] = MovementKey::from_index(i);
  return keys;
}

std::string to_string(const MovementKey& key) {
  return std::string(to_string(key.approach)) + "." + std::string(to_string(key.turn)) + "." +
         std::string(to_string(key.vclass));
}

std::optional<MovementKey> movement_key_from_string(std::string_view text) {
  auto first = text.find('.');
  auto second = first == std::string_view::npos ? first : text.find('.', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  auto approach = cardinal_from_string(text.substr(0, first));
  auto turn = turn_from_string(text.substr(first + 1, second - first - 1));
  auto vclass = vehicle_class_from_string(text.substr(second + 1));
  if (!approach || !turn || !vclass) return std::nullopt;
  return MovementKey{*approach, *turn, *vclass};
}

namespace {

template <typename Int>
bool read_int(std::string_view text, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > text.size()) return false;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  const std::string s = trim(text);
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0, mi = 0, sec = 0;
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':') {
    return std::nullopt;
  }
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d) ||
      !read_int(s, 11, 2, h) || !read_int(s, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < s.size()) {
    if (s[pos] != ':' || !read_int(s, pos + 1, 2, sec)) return std::nullopt;
    pos += 3;
    if (pos < s.size()) {
      // fractional seconds are accepted but must be zero; bins are whole seconds
      if (s[pos] != '.') return std::nullopt;
      for (++pos; pos < s.size(); ++pos) {
        if (s[pos] != '0') return std::nullopt;
      }
    }
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return local_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

std::string format_timestamp(Timestamp t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

SchemaMapping SchemaMapping::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
    // accept a whole source config with the mapping under "schema"
    if (doc.is_object() && doc.contains("schema")) doc = doc["schema"];
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::parse, std::string("schema mapping: ") + e.what());
  }
  auto fail = [](const std::string& what) {
    throw Error(ErrorCategory::invalid_input, "schema mapping: " + what);
  };
  try {
    SchemaMapping schema;
    schema.id_column = doc.at("id_column").get<std::string>();
    schema.timestamp_column = doc.at("timestamp_column").get<std::string>();
    const auto bin_seconds = doc.value("bin_seconds", 900);
    if (bin_seconds <= 0) fail("bin_seconds must be positive");
    schema.bin_duration = seconds{bin_seconds};
    if (doc.contains("longitude_column")) {
      schema.longitude_column = doc["longitude_column"].get<std::string>();
    }
    if (doc.contains("latitude_column")) {
      schema.latitude_column = doc["latitude_column"].get<std::string>();
    }

    std::set<MovementKey> absent;
    const auto absent_list = doc.value("absent_columns", nlohmann::json::array());
    for (const auto& item : absent_list) {
      auto key = movement_key_from_string(item.get<std::string>());
      if (!key) fail("bad movement key '" + item.get<std::string>() + "'");
      absent.insert(*key);
    }
    std::map<MovementKey, std::string> overrides;
    const auto override_map = doc.value("column_overrides", nlohmann::json::object());
    for (const auto& [name, column] : override_map.items()) {
      auto key = movement_key_from_string(name);
      if (!key) fail("bad movement key '" + name + "'");
      overrides[*key] = column.get<std::string>();
    }

    const auto tmpl = doc.value("movement_column_template", std::string{});
    const auto approach_tokens = doc.value("approach_tokens", nlohmann::json::object());
    const auto turn_tokens = doc.value("turn_tokens", nlohmann::json::object());
    const auto vclass_tokens = doc.value("vclass_tokens", nlohmann::json::object());

    auto expand = [&](const MovementKey& key) -> std::optional<std::string> {
      if (tmpl.empty()) return std::nullopt;
      const auto a = approach_tokens.find(std::string(to_string(key.approach)));
      const auto t = turn_tokens.find(std::string(to_string(key.turn)));
      const auto v = vclass_tokens.find(std::string(to_string(key.vclass)));
      if (a == approach_tokens.end() || t == turn_tokens.end() || v == vclass_tokens.end()) {
        return std::nullopt;
      }
      std::string out = tmpl;
      auto replace = [&out](const std::string& placeholder, const std::string& value) {
        for (auto pos = out.find(placeholder); pos != std::string::npos;
             pos = out.find(placeholder, pos + value.size())) {
          out.replace(pos, placeholder.size(), value);
        }
      };
      replace("{approach}", a->get<std::string>());
      replace("{turn}", t->get<std::string>());
      replace("{vclass}", v->get<std::string>());
      return out;
    };

    for (const auto& key : all_movement_keys()) {
      if (absent.contains(key)) {
        if (overrides.contains(key)) fail(to_string(key) + " is both absent and overridden");
        schema.movement_columns[key] = std::nullopt;
      } else if (auto it = overrides.find(key); it != overrides.end()) {
        schema.movement_columns[key] = it->second;
      } else if (auto column = expand(key)) {
        schema.movement_columns[key] = *column;
      } else {
        fail("no column for " + to_string(key) + " (add a template token, override, or absent entry)");
      }
    }
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::invalid_input, std::string("schema mapping: ") + e.what());
  }
}

std::vector<CountBin> TmcDataset::bins_for(const std::string& intersection_id) const {
  std::vector<CountBin> out;
  for (const auto& bin : bins) {
    if (bin.intersection_id == intersection_id) out.push_back(bin);
  }
  return out;
}

namespace {

enum class CountParse { ok, empty, negative, invalid };

CountParse parse_count(std::string_view raw, std::int64_t& out) {
  const std::string s = trim(raw);
  if (s.empty()) {
    out = 0;
    return CountParse::empty;
  }
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec == std::errc{} && ptr == s.data() + s.size()) {
    out = value;
    return value < 0 ? CountParse::negative : CountParse::ok;
  }
  // some exports write integral counts as "12.0"
  double d = 0.0;
  auto [dptr, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (dec == std::errc{} && dptr == s.data() + s.size() && std::isfinite(d) &&
      d == std::floor(d) && std::fabs(d) < 9e15) {
    out = static_cast<std::int64_t>(d);
    return out < 0 ? CountParse::negative : CountParse::ok;
  }
  return CountParse::invalid;
}

std::map<std::string, std::vector<TimeSpan>> compute_ranges(const std::vector<CountBin>& bins) {
  std::map<std::string, std::vector<TimeSpan>> ranges;
  for (const auto& bin : bins) {
    auto& spans = ranges[bin.intersection_id];
    if (!spans.empty() && spans.back().end == bin.bin_start) {
      spans.back().end = bin.bin_end();
    } else {
      spans.push_back({bin.bin_start, bin.bin_end()});
    }
  }
  return ranges;
}

void sort_bins(std::vector<CountBin>& bins) {
  std::stable_sort(bins.begin(), bins.end(), [](const CountBin& a, const CountBin& b) {
    if (a.intersection_id != b.intersection_id) return a.intersection_id < b.intersection_id;
    return a.bin_start < b.bin_start;
  });
}

}  // namespace

TmcDataset build_tmc_dataset(const std::vector<std::string>& columns,
                             const std::vector<std::vector<std::string>>& rows,
                             const SchemaMapping& schema) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < columns.size(); ++i) index.emplace(columns[i], i);

  auto require = [&](const std::string& column, const std::string& role) {
    auto it = index.find(column);
    if (it == index.end()) {
      throw Error(ErrorCategory::invalid_input,
                  "missing " + role + " column '" + column + "' in input header");
    }
    return it->second;
  };
  const std::size_t id_col = require(schema.id_column, "id");
  const std::size_t ts_col = require(schema.timestamp_column, "timestamp");
  std::vector<std::pair<MovementKey, std::size_t>> movement_cols;
  for (const auto& [key, column] : schema.movement_columns) {
    if (!column) continue;
    movement_cols.emplace_back(key, require(*column, "movement " + to_string(key)));
  }
  std::optional<std::size_t> lon_col, lat_col;
  if (schema.longitude_column && schema.latitude_column) {
    auto lon_it = index.find(*schema.longitude_column);
    auto lat_it = index.find(*schema.latitude_column);
    if (lon_it != index.end() && lat_it != index.end()) {
      lon_col = lon_it->second;
      lat_col = lat_it->second;
    }
  }

  TmcDataset ds;
  ds.schema = schema;
  std::set<std::pair<std::string, Timestamp>> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_no = r + 1;
    auto diag = [&](const std::string& message) { ds.diagnostics.push_back({row_no, message}); };
    if (row.size() != columns.size()) {
      diag("expected " + std::to_string(columns.size()) + " fields, found " +
           std::to_string(row.size()));
      continue;
    }
    CountBin bin;
    bin.intersection_id = trim(row[id_col]);
    if (bin.intersection_id.empty()) {
      diag("empty intersection id");
      continue;
    }
    auto start = parse_timestamp(row[ts_col]);
    if (!start) {
      diag("bad timestamp '" + row[ts_col] + "'");
      continue;
    }
    bin.bin_start = *start;
    bin.duration = schema.bin_duration;

    bool ok = true;
    for (const auto& [key, col] : movement_cols) {
      std::int64_t value = 0;
      switch (parse_count(row[col], value)) {
        case CountParse::ok:
        case CountParse::empty:
          bin.counts[key] = value;
          break;
        case CountParse::negative:
          diag("negative count " + std::to_string(value) + " in column '" + columns[col] + "'");
          ok = false;
          break;
        case CountParse::invalid:
          diag("non-numeric count '" + row[col] + "' in column '" + columns[col] + "'");
          ok = false;
          break;
      }
      if (!ok) break;
    }
    if (!ok) continue;
    if (!seen.emplace(bin.intersection_id, bin.bin_start).second) {
      diag("duplicate bin " + bin.intersection_id + " @ " + format_timestamp(bin.bin_start));
      continue;
    }
    if (lon_col && !ds.locations.contains(bin.intersection_id)) {
      auto lon = std::strtod(row[*lon_col].c_str(), nullptr);
      auto lat = std::strtod(row[*lat_col].c_str(), nullptr);
      if (!trim(row[*lon_col]).empty() && !trim(row[*lat_col]).empty() && std::isfinite(lon) &&
          std::isfinite(lat)) {
        ds.locations[bin.intersection_id] = {lon, lat};
      }
    }
    ds.bins.push_back(std::move(bin));
  }
  sort_bins(ds.bins);
  ds.available_ranges = compute_ranges(ds.bins);
  return ds;
}

TmcDataset parse_tmc_csv(std::string_view text, const SchemaMapping& schema) {
  auto table = detail::parse_csv(text);
  if (table.header.empty()) throw Error(ErrorCategory::parse, "missing header");
  return build_tmc_dataset(table.header, table.rows, schema);
}

std::string serialize_tmc_csv(const std::vector<CountBin>& bins, const SchemaMapping& schema) {
  std::ostringstream out;
  std::vector<std::pair<MovementKey, std::string>> cols;
  for (const auto& [key, column] : schema.movement_columns) {
    if (column) cols.emplace_back(key, *column);
  }
  out << detail::csv_field(schema.id_column) << ',' << detail::csv_field(schema.timestamp_column);
  for (const auto& [key, column] : cols) out << ',' << detail::csv_field(column);
  out << '\n';
  for (const auto& bin : bins) {
    out << detail::csv_field(bin.intersection_id) << ',' << format_timestamp(bin.bin_start);
    for (const auto& [key, column] : cols) out << ',' << bin.count(key);
    out << '\n';
  }
  return out.str();
}

std::map<std::string, std::vector<TimeSpan>> available_time_range(
    const TmcDataset& ds, const std::vector<std::string>& ids) {
  std::map<std::string, std::vector<TimeSpan>> out;
  for (const auto& id : ids) {
    auto it = ds.available_ranges.find(id);
    out[id] = it == ds.available_ranges.end() ? std::vector<TimeSpan>{} : it->second;
  }
  return out;
}

std::vector<CountBin> slice_window(const TmcDataset& ds, const std::vector<std::string>& ids,
                                   Timestamp start, Timestamp end) {
  if (!(start < end)) {
    throw Error(ErrorCategory::invalid_input, "window start " + format_timestamp(start) +
                                                  " is not before end " + format_timestamp(end));
  }
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::map<std::pair<std::string, Timestamp>, const CountBin*> by_key;
  std::optional<Timestamp> anchor;
  for (const auto& bin : ds.bins) {
    if (!wanted.contains(bin.intersection_id)) continue;
    by_key[{bin.intersection_id, bin.bin_start}] = &bin;
    if (!anchor || bin.bin_start < *anchor) anchor = bin.bin_start;
  }
  if (!anchor) {
    std::string list;
    for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCategory::no_data, "no data in window: no bins at all for " + list);
  }

  const seconds step = ds.schema.bin_duration;
  auto check_aligned = [&](Timestamp t, const char* which) {
    const auto offset = (t - *anchor) % step;
    if (offset == seconds{0}) return;
    // floor toward the earlier boundary for negative offsets too
    const auto back = offset < seconds{0} ? offset + step : offset;
    const Timestamp before = t - back;
    throw Error(ErrorCategory::misaligned,
                std::string("window ") + which + " " + format_timestamp(t) +
                    " is not on a bin boundary; nearest boundaries are " +
                    format_timestamp(before) + " and " + format_timestamp(before + step));
  };
  check_aligned(start, "start");
  check_aligned(end, "end");

  std::vector<CountBin> out;
  std::vector<std::string> covered, missing;
  for (const auto& id : wanted) {
    for (Timestamp t = start; t < end; t += step) {
      auto it = by_key.find({id, t});
      const std::string label = id + "@" + format_timestamp(t);
      if (it == by_key.end()) {
        missing.push_back(label);
      } else {
        covered.push_back(label);
        out.push_back(*it->second);
      }
    }
  }
  if (!missing.empty()) {
    auto join = [](const std::vector<std::string>& items) {
      std::string s;
      for (const auto& item : items) s += (s.empty() ? "" : ", ") + item;
      return s.empty() ? std::string("none") : s;
    };
    throw Error(ErrorCategory::no_data, "no data in window: covered [" + join(covered) +
                                            "], missing [" + join(missing) + "]");
  }
  return out;
}

ScaleFactor ScaleFactor::parse(std::string_view decimal) {
  const std::string s = trim(decimal);
  if (!s.empty() && s.front() == '-') {
    throw Error(ErrorCategory::invalid_input, "negative scale factor '" + s + "'");
  }
  const auto dot = s.find('.');
  const std::string whole = s.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  auto digits_only = [](const std::string& part) {
    return std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if ((whole.empty() && frac.empty()) || !digits_only(whole) || !digits_only(frac) ||
      whole.size() > 9 || frac.size() > 9) {
    throw Error(ErrorCategory::invalid_input, "bad scale factor '" + s + "'");
  }
  ScaleFactor f;
  f.denominator = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) f.denominator *= 10;
  f.numerator = (whole.empty() ? 0 : std::stoll(whole)) * f.denominator +
                (frac.empty() ? 0 : std::stoll(frac));
  return f;
}

ScaleFactor ScaleFactor::from_double(double value) {
  if (!std::isfinite(value) || value < 0.0) {
    std::ostringstream msg;
    msg << "negative or non-finite scale factor " << value;
    throw Error(ErrorCategory::invalid_input, msg.str());
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (ec != std::errc{}) throw Error(ErrorCategory::invalid_input, "scale factor out of range");
  return parse(std::string_view(buf, end - buf));
}

std::vector<CountBin> scale_counts(const std::vector<CountBin>& bins, const Scaling& scaling) {
  auto check = [](const ScaleFactor& f) {
    if (f.numerator < 0 || f.denominator <= 0) {
      throw Error(ErrorCategory::invalid_input, "negative scale factor");
    }
  };
  check(scaling.all);
  for (const auto& [vclass, f] : scaling.per_class) check(f);

  std::vector<CountBin> out = bins;
  for (auto& bin : out) {
    for (auto& [key, count] : bin.counts) {
      auto it = scaling.per_class.find(key.vclass);
      const ScaleFactor& f = it == scaling.per_class.end() ? scaling.all : it->second;
      // floor((2*c*num + den) / (2*den)) is round-half-up of c*num/den
      const __int128 num = static_cast<__int128>(count) * f.numerator * 2 + f.denominator;
      count = static_cast<std::int64_t>(num / (static_cast<__int128>(f.denominator) * 2));
    }
  }
  return out;
}

}  // namespace tmcsim
