#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "semshare/rng.hpp"

namespace semshare {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

// Manhattan grid. Roads run along x = k * intersection_spacing (vertical) and
// y = k * intersection_spacing (horizontal); the area wraps at its edges.
struct GridSpec {
  double area_width = 1299.0;
  double area_height = 750.0;
  double lane_width = 3.5;
  double intersection_spacing = 433.0;
  int lanes_per_road = 4;

  void validate() const;
  int lanes_per_direction() const { return lanes_per_road / 2; }
  std::vector<double> vertical_roads() const;    // x coordinates
  std::vector<double> horizontal_roads() const;  // y coordinates
};

enum class Heading : std::uint8_t { up, down, left, right };

const char* to_string(Heading h);
Heading heading_from_string(const std::string& s);

enum class Turn : std::uint8_t { straight, left, right };

// Heading after turning; `left`/`right` are relative to the driver.
Heading turned(Heading h, Turn t);

struct VehicleState {
  Vec2 position;
  Heading heading = Heading::up;
  double speed = 10.0;  // 36 km/h
  int lane_index = 0;   // 0 = innermost lane of its direction
};

struct LinkTopology {
  struct Pair {
    std::size_t tx = 0;
    std::size_t rx = 0;
  };
  std::vector<Pair> v2v_pairs;
  std::vector<std::size_t> v2i_users;
  Vec2 bs_position{525.5, 649.5};
};

struct ScenarioState {
  GridSpec grid;
  std::vector<VehicleState> vehicles;
  LinkTopology topology;
};

struct TurnProbabilities {
  double left = 0.25;
  double right = 0.25;
  double straight = 0.5;

  void validate() const;
};

struct TurnCounts {
  std::uint64_t straight = 0;
  std::uint64_t left = 0;
  std::uint64_t right = 0;
  std::uint64_t total() const { return straight + left + right; }
};

// Lateral coordinate of a lane centerline for a vehicle travelling with
// `heading` in lane `lane_index` of the road whose centerline is `road`.
double lane_coordinate(const GridSpec& grid, double road, Heading heading, int lane_index);

// Places n_vehicles uniformly on the union of lane centerlines (a spatial
// Poisson process conditioned on the count). Headings follow right-hand
// traffic for the chosen lane.
ScenarioState init_scenario(const GridSpec& grid, std::size_t n_vehicles,
                            std::size_t min_vehicles, Rng& rng, double speed = 10.0);

// Advances every vehicle by speed * dt. Crossing an intersection centerline
// triggers a turn draw; turning snaps the vehicle onto the matching lane of
// the crossing road. Positions wrap to the opposite edge.
ScenarioState step_positions(const ScenarioState& state, double dt, const TurnProbabilities& turns,
                             Rng& rng, TurnCounts* counts = nullptr);

// Chooses W V2I users and Q V2V transmitters (disjoint) at random, then pairs
// transmitters in ascending id order with their nearest free non-transmitting
// neighbor.
LinkTopology select_topology(const ScenarioState& state, std::size_t q, std::size_t w, Rng& rng,
                             Vec2 bs_position = Vec2{525.5, 649.5});

void to_json(nlohmann::json& j, const ScenarioState& s);
void from_json(const nlohmann::json& j, ScenarioState& s);

}  // namespace semshare
