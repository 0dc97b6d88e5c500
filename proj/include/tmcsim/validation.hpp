#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/demand.hpp"
#include "tmcsim/tmc.hpp"

namespace tmcsim {

struct VehrouteRecord {
  std::string vehicle_id;
  double depart = 0.0;
  std::vector<std::string> edges;
};

struct VehrouteParse {
  std::vector<VehrouteRecord> records;
  std::vector<std::string> diagnostics;
};

/// Reads the simulator's vehroute output. Vehicles without a usable route
/// are reported and skipped. Throws Error{parse} on malformed XML.
VehrouteParse parse_vehroutes(std::string_view xml_text);

struct RoutesDocument {
  std::vector<VehicleTypeConfig> vtypes;
  std::vector<FlowSpec> flows;
};

/// Reads back a routes document written by emit_routes_xml.
RoutesDocument parse_routes_xml(std::string_view xml_text);

struct SimulatedBin {
  std::size_t bin_index = 0;
  std::map<MovementKey, std::int64_t> counts;
};

struct SimulatedCounts {
  std::string intersection_id;
  std::vector<SimulatedBin> bins;  // bin_index 0..bin_count-1 in order

  std::int64_t count(const MovementKey& key, std::size_t bin_index) const;
};

struct CountReconstruction {
  std::map<std::string, SimulatedCounts> by_intersection;
  std::vector<std::string> diagnostics;

  /// Counts for one intersection; all-zero bins when no vehicle matched.
  SimulatedCounts for_intersection(const std::string& intersection_id) const;

  std::size_t bin_count = 0;
};

/// Parses each id with the flow id grammar and counts distinct vehicles per
/// (intersection, movement, bin). Foreign ids and out-of-range bins are
/// reported and ignored.
CountReconstruction reconstruct_counts(const std::vector<std::string>& vehicle_ids,
                                       std::size_t bin_count);

struct ComparisonRow {
  MovementKey key;
  std::size_t bin_index = 0;
  std::int64_t real = 0;
  std::int64_t simulated = 0;
  std::int64_t abs_diff = 0;
  std::optional<double> pct_diff;  // percent of real; empty when real is 0
};

struct ComparisonTotals {
  std::int64_t real = 0;
  std::int64_t simulated = 0;
  std::int64_t abs_diff = 0;
  std::optional<double> pct_diff;
};

struct ComparisonReport {
  std::string intersection_id;
  std::vector<ComparisonRow> rows;  // ordered by (bin_index, key)
  ComparisonTotals totals;

  bool all_zero_diff() const;
};

/// Row per (key, bin) present on either side, missing side read as zero.
/// Real bins are indexed by their order from the earliest start. Throws
/// Error{invalid_input} on intersection or bin-structure mismatch.
ComparisonReport compare(const std::vector<CountBin>& real, const SimulatedCounts& sim);

/// Comparison rows for several intersections at once.
std::string report_to_csv(const std::vector<ComparisonReport>& reports);
std::string report_to_json(const std::vector<ComparisonReport>& reports);

/// Rebuilds count bins from the flows of a routes document: one bin per
/// (intersection, bin index) with number summed per movement. Bin starts are
/// `t0 + begin`. Returns the bin count implied by the latest flow end.
struct FlowDerivedCounts {
  std::map<std::string, std::vector<CountBin>> bins_by_intersection;
  std::size_t bin_count = 0;
  std::vector<std::string> diagnostics;
};
FlowDerivedCounts counts_from_flows(const std::vector<FlowSpec>& flows, Timestamp t0);

}  // namespace tmcsim
