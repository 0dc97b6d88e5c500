#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/junction_mapper.hpp"

namespace tmcsim {

enum class Turn { left = 0, through = 1, right = 2 };
enum class VehicleClass { car = 0, truck = 1, bus = 2 };

inline constexpr std::array<Turn, 3> kAllTurns = {Turn::left, Turn::through, Turn::right};
inline constexpr std::array<VehicleClass, 3> kAllVehicleClasses = {
    VehicleClass::car, VehicleClass::truck, VehicleClass::bus};

std::string_view to_string(Turn t);
std::string_view to_string(VehicleClass v);
std::optional<Turn> turn_from_string(std::string_view text);
std::optional<VehicleClass> vehicle_class_from_string(std::string_view text);

/// One turning movement: travel direction on entry, turn, vehicle class.
struct MovementKey {
  Cardinal approach = Cardinal::east;
  Turn turn = Turn::left;
  VehicleClass vclass = VehicleClass::car;

  // 0..35, approach-major
  int index() const {
    return static_cast<int>(approach) * 9 + static_cast<int>(turn) * 3 + static_cast<int>(vclass);
  }
  static MovementKey from_index(int index);

  friend auto operator<=>(const MovementKey&, const MovementKey&) = default;
};

inline constexpr int kMovementKeyCount = 36;
std::array<MovementKey, kMovementKeyCount> all_movement_keys();

// "north.left.car"
std::string to_string(const MovementKey& key);
std::optional<MovementKey> movement_key_from_string(std::string_view text);

// Naive local civil time; data and simulation share one clock.
using Timestamp = std::chrono::local_seconds;

/// Accepts "YYYY-MM-DDTHH:MM[:SS[.fff]]" with 'T' or a space as separator.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

struct TimeSpan {
  Timestamp start;
  Timestamp end;

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

struct CountBin {
  std::string intersection_id;
  Timestamp bin_start;
  std::chrono::seconds duration{900};
  std::map<MovementKey, std::int64_t> counts;  // absent key means zero

  std::int64_t count(const MovementKey& key) const {
    auto it = counts.find(key);
    return it == counts.end() ? 0 : it->second;
  }
  Timestamp bin_end() const { return bin_start + duration; }

  friend bool operator==(const CountBin&, const CountBin&) = default;
};

/// Where each movement lives in a tabular source. A movement mapped to
/// nullopt is declared absent and reads as zero.
struct SchemaMapping {
  std::string id_column;
  std::string timestamp_column;
  std::chrono::seconds bin_duration{900};
  std::optional<std::string> longitude_column;
  std::optional<std::string> latitude_column;
  std::map<MovementKey, std::optional<std::string>> movement_columns;

  /// Reads the JSON mapping format documented in docs/schema-mapping.md.
  /// Throws Error{invalid_input} on incomplete or contradictory mappings.
  static SchemaMapping from_json(std::string_view json_text);
};

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Diagnostic {
  std::size_t row = 0;  // 1-based data row, 0 when not row-specific
  std::string message;
};

struct TmcDataset {
  std::vector<CountBin> bins;  // sorted by (intersection_id, bin_start), unique
  SchemaMapping schema;
  std::map<std::string, std::vector<TimeSpan>> available_ranges;
  std::map<std::string, GeoPoint> locations;
  std::vector<Diagnostic> diagnostics;

  std::vector<CountBin> bins_for(const std::string& intersection_id) const;
};

/// Builds a dataset from already-split rows. Shared by the CSV reader and the
/// open-data client. Throws Error{invalid_input} when a mandatory column is
/// missing from `columns`; bad rows become diagnostics.
TmcDataset build_tmc_dataset(const std::vector<std::string>& columns,
                             const std::vector<std::vector<std::string>>& rows,
                             const SchemaMapping& schema);

/// Throws Error{parse} "missing header" for empty input.
TmcDataset parse_tmc_csv(std::string_view text, const SchemaMapping& schema);

/// Writes bins back in the schema's layout (absent movements omitted).
std::string serialize_tmc_csv(const std::vector<CountBin>& bins, const SchemaMapping& schema);

/// Maximal contiguous spans per id; ids without data map to an empty list.
std::map<std::string, std::vector<TimeSpan>> available_time_range(
    const TmcDataset& ds, const std::vector<std::string>& ids);

/// The bins lying inside [start, end) for `ids`. Every id must have every bin
/// of the window: misaligned bounds throw Error{misaligned}, holes throw
/// Error{no_data} listing covered and missing bins.
std::vector<CountBin> slice_window(const TmcDataset& ds, const std::vector<std::string>& ids,
                                   Timestamp start, Timestamp end);

/// Exact non-negative rational, so half-way products round predictably.
struct ScaleFactor {
  std::int64_t numerator = 1;
  std::int64_t denominator = 1;

  /// Parses a plain decimal such as "1.2" or "0.5" exactly.
  static ScaleFactor parse(std::string_view decimal);
  /// Goes through the shortest decimal form of `value`.
  static ScaleFactor from_double(double value);
};

struct Scaling {
  ScaleFactor all;
  std::map<VehicleClass, ScaleFactor> per_class;  // overrides `all`
};

/// round-half-up(count * factor) per movement. Throws Error{invalid_input}
/// for negative factors.
std::vector<CountBin> scale_counts(const std::vector<CountBin>& bins, const Scaling& scaling);

}  // namespace tmcsim
