#include "semshare/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "semshare/errors.hpp"

namespace semshare {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void GridSpec::validate() const {
  if (!(area_width > 0 && area_height > 0 && lane_width > 0 && intersection_spacing > 0)) {
    throw ConfigError("grid: all dimensions must be > 0");
  }
  if (lanes_per_road <= 0 || lanes_per_road % 2 != 0) {
    throw ConfigError("grid: lanes_per_road must be a positive even number");
  }
  if (lanes_per_direction() * lane_width * 2 >= intersection_spacing) {
    throw ConfigError("grid: lanes do not fit between intersections");
  }
}

namespace {

std::vector<double> road_positions(double extent, double spacing) {
  std::vector<double> roads;
  for (int k = 0; k * spacing < extent - 1e-9; ++k) roads.push_back(k * spacing);
  return roads;
}

double wrap(double v, double extent) {
  double r = std::fmod(v, extent);
  if (r < 0) r += extent;
  if (r >= extent) r = 0.0;  // fmod rounding at the top edge
  return r;
}

bool is_vertical(Heading h) { return h == Heading::up || h == Heading::down; }

// +1 when moving towards larger coordinates along the axis of travel.
double direction_sign(Heading h) { return (h == Heading::up || h == Heading::right) ? 1.0 : -1.0; }

// Distance ahead to the next road centerline in C along a wrapped axis.
double distance_to_next(double s, double sign, double extent, const std::vector<double>& centers,
                        double* hit) {
  double best = std::numeric_limits<double>::infinity();
  for (double c : centers) {
    double d = sign > 0 ? c - s : s - c;
    d = std::fmod(d, extent);
    if (d < 0) d += extent;
    if (d == 0.0) d = extent;
    if (d < best) {
      best = d;
      *hit = c;
    }
  }
  return best;
}

// Centerline of the road a vehicle is driving on, recovered from its lane.
double current_road(const GridSpec& grid, const VehicleState& v) {
  const double offset = (v.lane_index + 0.5) * grid.lane_width;
  switch (v.heading) {
    case Heading::up:
      return wrap(v.position.x - offset, grid.area_width);
    case Heading::down:
      return wrap(v.position.x + offset, grid.area_width);
    case Heading::right:
      return wrap(v.position.y + offset, grid.area_height);
    case Heading::left:
      return wrap(v.position.y - offset, grid.area_height);
  }
  return 0.0;
}

double snap_to_road(double value, const std::vector<double>& roads, double extent) {
  double best = roads.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (double r : roads) {
    double d = std::abs(value - r);
    d = std::min(d, extent - d);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

}  // namespace

std::vector<double> GridSpec::vertical_roads() const {
  return road_positions(area_width, intersection_spacing);
}

std::vector<double> GridSpec::horizontal_roads() const {
  return road_positions(area_height, intersection_spacing);
}

const char* to_string(Heading h) {
  switch (h) {
    case Heading::up:
      return "up";
    case Heading::down:
      return "down";
    case Heading::left:
      return "left";
    case Heading::right:
      return "right";
  }
  return "?";
}

Heading heading_from_string(const std::string& s) {
  if (s == "up") return Heading::up;
  if (s == "down") return Heading::down;
  if (s == "left") return Heading::left;
  if (s == "right") return Heading::right;
  throw IoError("unknown heading '" + s + "'");
}

Heading turned(Heading h, Turn t) {
  if (t == Turn::straight) return h;
  const bool left = t == Turn::left;
  switch (h) {
    case Heading::up:
      return left ? Heading::left : Heading::right;
    case Heading::down:
      return left ? Heading::right : Heading::left;
    case Heading::right:
      return left ? Heading::up : Heading::down;
    case Heading::left:
      return left ? Heading::down : Heading::up;
  }
  return h;
}

void TurnProbabilities::validate() const {
  if (left < 0 || right < 0 || straight < 0) {
    throw ConfigError("turn probabilities must be non-negative");
  }
  if (std::abs(left + right + straight - 1.0) > 1e-9) {
    throw ConfigError("turn probabilities must sum to 1 (p_left + p_right + p_straight)");
  }
}

double lane_coordinate(const GridSpec& grid, double road, Heading heading, int lane_index) {
  const double offset = (lane_index + 0.5) * grid.lane_width;
  // Right-hand traffic: up lanes east of the centerline, right lanes south.
  switch (heading) {
    case Heading::up:
      return wrap(road + offset, grid.area_width);
    case Heading::down:
      return wrap(road - offset, grid.area_width);
    case Heading::right:
      return wrap(road - offset, grid.area_height);
    case Heading::left:
      return wrap(road + offset, grid.area_height);
  }
  return road;
}

ScenarioState init_scenario(const GridSpec& grid, std::size_t n_vehicles, std::size_t min_vehicles,
                            Rng& rng, double speed) {
  grid.validate();
  if (n_vehicles < min_vehicles) {
    throw ConfigError("scenario: n_vehicles (" + std::to_string(n_vehicles) +
                      ") must be >= Q + W (" + std::to_string(min_vehicles) + ")");
  }
  if (!(speed > 0)) throw ConfigError("scenario: speed must be > 0");

  const auto vroads = grid.vertical_roads();
  const auto hroads = grid.horizontal_roads();
  const int per_dir = grid.lanes_per_direction();
  const double vertical_length = static_cast<double>(vroads.size()) * grid.lanes_per_road * grid.area_height;
  const double horizontal_length = static_cast<double>(hroads.size()) * grid.lanes_per_road * grid.area_width;
  const double p_vertical = vertical_length / (vertical_length + horizontal_length);

  ScenarioState state;
  state.grid = grid;
  state.vehicles.reserve(n_vehicles);
  for (std::size_t i = 0; i < n_vehicles; ++i) {
    VehicleState v;
    v.speed = speed;
    const bool vertical = rng.uniform() < p_vertical;
    const auto& roads = vertical ? vroads : hroads;
    const double road = roads[rng.index(roads.size())];
    const bool positive = rng.index(2) == 0;
    v.lane_index = static_cast<int>(rng.index(static_cast<std::size_t>(per_dir)));
    if (vertical) {
      v.heading = positive ? Heading::up : Heading::down;
      v.position.x = lane_coordinate(grid, road, v.heading, v.lane_index);
      v.position.y = wrap(rng.uniform(0.0, grid.area_height), grid.area_height);
    } else {
      v.heading = positive ? Heading::right : Heading::left;
      v.position.y = lane_coordinate(grid, road, v.heading, v.lane_index);
      v.position.x = wrap(rng.uniform(0.0, grid.area_width), grid.area_width);
    }
    state.vehicles.push_back(v);
  }
  return state;
}

ScenarioState step_positions(const ScenarioState& state, double dt, const TurnProbabilities& turns,
                             Rng& rng, TurnCounts* counts) {
  turns.validate();
  if (!(dt >= 0)) throw ConfigError("step_positions: dt must be >= 0");
  const GridSpec& grid = state.grid;
  const auto vroads = grid.vertical_roads();
  const auto hroads = grid.horizontal_roads();

  ScenarioState next = state;
  for (auto& v : next.vehicles) {
    double remaining = v.speed * dt;
    while (remaining > 0) {
      const bool vertical = is_vertical(v.heading);
      const double sign = direction_sign(v.heading);
      const double extent = vertical ? grid.area_height : grid.area_width;
      double& along = vertical ? v.position.y : v.position.x;

      double crossing = 0.0;
      const double ahead =
          distance_to_next(along, sign, extent, vertical ? hroads : vroads, &crossing);
      if (ahead > remaining) {
        along = wrap(along + sign * remaining, extent);
        break;
      }

      // The vehicle reaches an intersection centerline during this step.
      remaining -= ahead;
      const double u = rng.uniform();
      Turn turn = Turn::straight;
      if (u < turns.left) {
        turn = Turn::left;
      } else if (u < turns.left + turns.right) {
        turn = Turn::right;
      }
      if (counts != nullptr) {
        if (turn == Turn::left) {
          ++counts->left;
        } else if (turn == Turn::right) {
          ++counts->right;
        } else {
          ++counts->straight;
        }
      }

      if (turn == Turn::straight) {
        // Exactly on the centerline: distance_to_next now looks past it.
        along = crossing;
        continue;
      }
      const double old_road =
          snap_to_road(current_road(grid, v), vertical ? vroads : hroads,
                       vertical ? grid.area_width : grid.area_height);
      v.heading = turned(v.heading, turn);
      if (vertical) {
        v.position.y = lane_coordinate(grid, crossing, v.heading, v.lane_index);
        v.position.x = old_road;
      } else {
        v.position.x = lane_coordinate(grid, crossing, v.heading, v.lane_index);
        v.position.y = old_road;
      }
    }
  }
  return next;
}

LinkTopology select_topology(const ScenarioState& state, std::size_t q, std::size_t w, Rng& rng,
                             Vec2 bs_position) {
  const std::size_t n = state.vehicles.size();
  if (q + w > n) {
    throw ConfigError("topology: need Q + W distinct vehicles, have " + std::to_string(n));
  }
  if (q > 0 && n - q < q) {
    throw ConfigError("topology: not enough non-transmitting vehicles to receive " +
                      std::to_string(q) + " V2V links");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first W + Q entries are a uniform random draw.
  for (std::size_t i = 0; i < q + w; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }

  LinkTopology topo;
  topo.bs_position = bs_position;
  topo.v2i_users.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(w));
  std::vector<std::size_t> transmitters(order.begin() + static_cast<std::ptrdiff_t>(w),
                                        order.begin() + static_cast<std::ptrdiff_t>(w + q));
  std::sort(transmitters.begin(), transmitters.end());

  std::vector<bool> unavailable(n, false);
  for (std::size_t t : transmitters) unavailable[t] = true;

  for (std::size_t t : transmitters) {
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (unavailable[c]) continue;
      const double d = distance(state.vehicles[t].position, state.vehicles[c].position);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    unavailable[best] = true;
    topo.v2v_pairs.push_back({t, best});
  }
  return topo;
}

void to_json(nlohmann::json& j, const ScenarioState& s) {
  nlohmann::json vehicles = nlohmann::json::array();
  for (const auto& v : s.vehicles) {
    vehicles.push_back({{"x", v.position.x},
                        {"y", v.position.y},
                        {"heading", to_string(v.heading)},
                        {"speed", v.speed},
                        {"lane", v.lane_index}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : s.topology.v2v_pairs) pairs.push_back({p.tx, p.rx});
  j = {{"grid",
        {{"area_width", s.grid.area_width},
         {"area_height", s.grid.area_height},
         {"lane_width", s.grid.lane_width},
         {"intersection_spacing", s.grid.intersection_spacing},
         {"lanes_per_road", s.grid.lanes_per_road}}},
       {"vehicles", vehicles},
       {"topology",
        {{"v2v_pairs", pairs},
         {"v2i_users", s.topology.v2i_users},
         {"bs_position", {s.topology.bs_position.x, s.topology.bs_position.y}}}}};
}

void from_json(const nlohmann::json& j, ScenarioState& s) {
  const auto& g = j.at("grid");
  s.grid.area_width = g.at("area_width").get<double>();
  s.grid.area_height = g.at("area_height").get<double>();
  s.grid.lane_width = g.at("lane_width").get<double>();
  s.grid.intersection_spacing = g.at("intersection_spacing").get<double>();
  s.grid.lanes_per_road = g.at("lanes_per_road").get<int>();
  s.vehicles.clear();
  for (const auto& v : j.at("vehicles")) {
    VehicleState vs;
    vs.position = {v.at("x").get<double>(), v.at("y").get<double>()};
    vs.heading = heading_from_string(v.at("heading").get<std::string>());
    vs.speed = v.at("speed").get<double>();
    vs.lane_index = v.at("lane").get<int>();
    s.vehicles.push_back(vs);
  }
  const auto& t = j.at("topology");
  s.topology.v2v_pairs.clear();
  for (const auto& p : t.at("v2v_pairs")) {
    s.topology.v2v_pairs.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
  }
  s.topology.v2i_users = t.at("v2i_users").get<std::vector<std::size_t>>();
  s.topology.bs_position = {t.at("bs_position").at(0).get<double>(),
                            t.at("bs_position").at(1).get<double>()};
}

}  // namespace semshare
