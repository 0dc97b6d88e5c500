#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/junction_mapper.hpp"
#include "tmcsim/tmc.hpp"

namespace tmcsim {

enum class CarFollowModel { Krauss, KraussOrig, IDM, Wiedemann };

// Attribute value the simulator expects ("KraussOrig1" for KraussOrig).
std::string_view to_string(CarFollowModel model);
std::optional<CarFollowModel> car_follow_model_from_string(std::string_view text);

struct VehicleTypeConfig {
  std::string type_id;
  VehicleClass vclass = VehicleClass::car;
  double length = 5.0;  // meters
  double sigma = 0.5;   // driver imperfection, 0 = deterministic
  CarFollowModel car_follow_model = CarFollowModel::Krauss;

  friend bool operator==(const VehicleTypeConfig&, const VehicleTypeConfig&) = default;
};

/// car 5.0 m, truck 7.1 m, bus 12.0 m; sigma 0.5; Krauss.
std::vector<VehicleTypeConfig> default_vehicle_types();

/// Throws Error{invalid_input} when length <= 0 or sigma is outside [0, 1].
void validate(const VehicleTypeConfig& vtype);

// The simulator's vClass attribute for a vehicle class.
std::string_view simulator_vclass(VehicleClass vclass);

struct FlowSpec {
  std::string flow_id;
  std::string from_edge;
  std::string to_edge;
  double begin = 0.0;  // seconds from simulation start
  double end = 0.0;
  std::int64_t count = 0;
  std::string vtype;

  friend auto operator<=>(const FlowSpec&, const FlowSpec&) = default;
};

/// through keeps the heading, left rotates it 90 degrees counterclockwise,
/// right 90 degrees clockwise.
Cardinal movement_exit_direction(Cardinal approach, Turn turn);

/// A movement with a positive count that could not be attached to the
/// network (missing leg or vehicle type).
struct DroppedMovement {
  MovementKey key;
  std::size_t bin_index = 0;
  std::int64_t count = 0;
  std::string reason;
};

struct CompiledDemand {
  std::vector<FlowSpec> flows;
  std::vector<DroppedMovement> dropped;
  std::vector<std::string> diagnostics;
};

/// One flow per (bin, movement) with a positive count. Begin/end are the bin
/// bounds relative to `t0`; the bin index is (bin_start - t0) / duration.
/// Throws Error{invalid_input} when a bin belongs to another intersection,
/// starts before `t0`, or is off the bin grid.
CompiledDemand compile_flows(const IntersectionBinding& binding, const std::vector<CountBin>& bins,
                             const std::vector<VehicleTypeConfig>& vtypes, Timestamp t0);

/// Flow id grammar: f_<intersectionId>_<approach><turn>_<vclass>_<binIndex>
/// with approach in {N,E,S,W} and turn in {L,T,R}. The simulator appends
/// ".<n>" per vehicle. Throws Error{invalid_input} if the intersection id is
/// empty or contains '_' or '.'.
std::string encode_flow_id(std::string_view intersection_id, const MovementKey& key,
                           std::size_t bin_index);

struct ParsedVehicleId {
  std::string intersection_id;
  MovementKey key;
  std::size_t bin_index = 0;

  friend bool operator==(const ParsedVehicleId&, const ParsedVehicleId&) = default;
};

/// Inverse of encode_flow_id; accepts the bare flow id or one with a
/// ".<n>" vehicle suffix. Throws Error{parse} echoing the id otherwise.
ParsedVehicleId parse_vehicle_id(std::string_view vehicle_id);

/// Routes document with vTypes then flows (sorted by begin, then id).
/// Throws Error{invalid_input} on duplicate flow ids or invalid vtypes.
std::string emit_routes_xml(const std::vector<FlowSpec>& flows,
                            const std::vector<VehicleTypeConfig>& vtypes);

struct ScenarioConfig {
  std::string network_path;
  std::string route_path;
  double begin = 0.0;
  double end = 900.0;
  double step_length = 1.0;
  bool vehroute_output = false;
  std::string vehroute_path = "vehroutes.xml";
};

/// Number of simulation steps the configuration spans.
std::int64_t simulation_steps(const ScenarioConfig& sc);

std::string emit_sumocfg(const ScenarioConfig& sc);

}  // namespace tmcsim
