#include "semshare/config.hpp"

#include <fstream>
#include <set>

#include "semshare/baselines.hpp"
#include "semshare/errors.hpp"

namespace semshare {

namespace {

using nlohmann::json;

[[noreturn]] void type_error(const std::string& where, const char* want) {
  throw ConfigError("config: '" + where + "' must be " + want);
}

void read_value(const json& v, const std::string& where, double& out) {
  if (!v.is_number()) type_error(where, "a number");
  out = v.get<double>();
}

void read_value(const json& v, const std::string& where, unsigned long& out) {
  if (!v.is_number_unsigned()) type_error(where, "a non-negative integer");
  out = v.get<unsigned long>();
}

void read_value(const json& v, const std::string& where, int& out) {
  if (!v.is_number_integer()) type_error(where, "an integer");
  out = v.get<int>();
}

void read_value(const json& v, const std::string& where, bool& out) {
  if (!v.is_boolean()) type_error(where, "true or false");
  out = v.get<bool>();
}

void read_value(const json& v, const std::string& where, std::string& out) {
  if (!v.is_string()) type_error(where, "a string");
  out = v.get<std::string>();
}

template <class T>
void read_value(const json& v, const std::string& where, std::vector<T>& out) {
  if (!v.is_array()) type_error(where, "an array");
  std::vector<T> tmp(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) read_value(v[i], where + "[" + std::to_string(i) + "]", tmp[i]);
  out = std::move(tmp);
}

void read_value(const json& v, const std::string& where, Vec2& out) {
  if (!v.is_array() || v.size() != 2) type_error(where, "an [x, y] pair");
  read_value(v[0], where + "[0]", out.x);
  read_value(v[1], where + "[1]", out.y);
}

void read_value(const json& v, const std::string& where, std::vector<std::pair<std::string, std::string>>& out) {
  if (!v.is_object()) type_error(where, "an object of agent_kind -> path");
  out.clear();
  for (auto it = v.begin(); it != v.end(); ++it) {
    std::string path;
    read_value(it.value(), where + "." + it.key(), path);
    out.emplace_back(it.key(), path);
  }
}

json write_value(const Vec2& v) { return json::array({v.x, v.y}); }
json write_value(const std::vector<std::pair<std::string, std::string>>& v) {
  json j = json::object();
  for (const auto& [k, p] : v) j[k] = p;
  return j;
}
template <class T>
json write_value(const T& v) {
  return json(v);
}

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) type_error(path_.empty() ? "<root>" : path_, "an object");
  }

  template <class T>
  void field(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = node_.find(key); it != node_.end()) read_value(*it, where(key), out);
  }

  template <class F>
  void section(const char* key, F&& fn) {
    seen_.insert(key);
    if (auto it = node_.find(key); it != node_.end()) {
      Reader child(*it, where(key));
      fn(child);
      child.finish();
    }
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("config: unknown key '" + where(it.key().c_str()) + "'");
    }
  }

 private:
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& node) : node_(node) { node_ = json::object(); }

  template <class T>
  void field(const char* key, T& v) {
    node_[key] = write_value(v);
  }

  template <class F>
  void section(const char* key, F&& fn) {
    json child;
    Writer w(child);
    fn(w);
    node_[key] = std::move(child);
  }

 private:
  json& node_;
};

template <class IO>
void visit(IO& io, RunConfig& c) {
  io.field("seed", c.seed);
  io.field("test_seed", c.test_seed);
  io.field("agent_kind", c.agent_kind);
  io.field("episode_max", c.episode_max);
  io.field("episode_test", c.episode_test);
  io.field("checkpoint_every", c.checkpoint_every);
  io.field("step_metrics", c.step_metrics);
  io.field("output_dir", c.output_dir);
  EnvConfig& e = c.env;
  io.section("scenario", [&](IO& s) {
    s.field("n_vehicles", e.n_vehicles);
    s.field("q", e.q);
    s.field("w", e.w);
    s.field("speed", e.speed);
    s.field("bs_position", e.bs_position);
    s.field("refresh_period", e.refresh_period);
    s.field("refresh_dt", e.refresh_dt);
    s.field("reselect_topology", e.reselect_topology);
    s.section("grid", [&](IO& g) {
      g.field("area_width", e.grid.area_width);
      g.field("area_height", e.grid.area_height);
      g.field("lane_width", e.grid.lane_width);
      g.field("intersection_spacing", e.grid.intersection_spacing);
      g.field("lanes_per_road", e.grid.lanes_per_road);
    });
    s.section("turn_probs", [&](IO& t) {
      t.field("left", e.turns.left);
      t.field("right", e.turns.right);
      t.field("straight", e.turns.straight);
    });
  });
  io.section("channel", [&](IO& s) {
    ChannelConfig& ch = e.channel;
    s.field("carrier_ghz", ch.carrier_ghz);
    s.field("bs_height", ch.bs_height);
    s.field("vehicle_height", ch.vehicle_height);
    s.field("bs_antenna_gain_db", ch.bs_antenna_gain_db);
    s.field("vehicle_antenna_gain_db", ch.vehicle_antenna_gain_db);
    s.field("bs_noise_figure_db", ch.bs_noise_figure_db);
    s.field("vehicle_noise_figure_db", ch.vehicle_noise_figure_db);
    s.field("v2v_shadow_std_db", ch.v2v_shadow_std_db);
    s.field("v2i_shadow_std_db", ch.v2i_shadow_std_db);
    s.field("v2v_decorrelation_m", ch.v2v_decorrelation_m);
    s.field("v2i_decorrelation_m", ch.v2i_decorrelation_m);
    s.field("los_threshold_m", ch.los_threshold_m);
  });
  io.section("env", [&](IO& s) {
    s.field("step_dt", e.step_dt);
    s.field("steps_per_episode", e.steps_per_episode);
    s.field("time_budget", e.time_budget);
    s.field("demand_multiplier", e.demand_multiplier);
    s.field("demand_base", e.demand_base);
    s.field("u_ref", e.u_ref);
    s.field("v2i_u", e.v2i_u);
    s.field("u_bits", e.u_bits);
    s.field("xi_threshold", e.xi_threshold);
    s.field("power_levels_dbm", e.power_levels_dbm);
    s.field("off_power_dbm", e.off_power_dbm);
    s.field("v2i_power_dbm", e.v2i_power_dbm);
    s.field("noise_dbm", e.noise_dbm);
    s.field("lambda_weight", e.lambda_weight);
    s.field("varpi", e.varpi);
    s.field("obs_gain_center_db", e.obs_gain_center_db);
    s.field("obs_gain_scale_db", e.obs_gain_scale_db);
    s.field("obs_sinr_floor_db", e.obs_sinr_floor_db);
    s.field("obs_sinr_scale_db", e.obs_sinr_scale_db);
  });
  io.section("semantic", [&](IO& s) {
    s.field("bandwidth_hz", e.semantic.bandwidth_hz);
    s.field("u_min", e.semantic.u_min);
    s.field("u_max", e.semantic.u_max);
    s.field("info_per_sentence_ratio", e.semantic.info_per_sentence_ratio);
    s.field("similarity_table", c.similarity_table);
    s.section("surrogate", [&](IO& g) {
      g.field("a", c.surrogate.a);
      g.field("b", c.surrogate.b);
      g.field("c", c.surrogate.c);
      g.field("u_step", c.surrogate_grid.u_step);
      g.field("sinr_min_db", c.surrogate_grid.sinr_min_db);
      g.field("sinr_max_db", c.surrogate_grid.sinr_max_db);
      g.field("sinr_step_db", c.surrogate_grid.sinr_step_db);
    });
  });
  io.section("agent", [&](IO& s) {
    AgentConfig& a = c.agent;
    s.field("hidden", a.hidden);
    s.field("lr_q", a.lr_q);
    s.field("lr_policy", a.lr_policy);
    s.field("lr_entropy", a.lr_entropy);
    s.field("gamma", a.gamma);
    s.field("tau", a.tau);
    s.field("reward_scale", a.reward_scale);
    s.field("batch_size", a.batch_size);
    s.field("buffer_capacity", a.buffer_capacity);
    s.field("buffer_threshold", a.buffer_threshold);
    s.field("iteration_threshold", a.iteration_threshold);
    s.field("update_every", a.update_every);
    s.field("explore_steps", a.explore_steps);
    s.field("initial_epsilon", a.initial_epsilon);
    s.field("final_layer_init", a.final_layer_init);
    s.field("shared_links", a.shared_links);
    s.field("ddpg_noise_std", a.ddpg_noise_std);
    s.field("hard_sync_every", a.hard_sync_every);
    s.section("exploration", [&](IO& x) {
      x.field("start", a.exploration.start);
      x.field("floor", a.exploration.floor);
      x.field("fraction", a.exploration.fraction);
    });
  });
  io.section("sweep", [&](IO& s) {
    s.field("parameter", c.sweep.parameter);
    s.field("values", c.sweep.values);
    s.field("agents", c.sweep.agents);
    s.field("seeds", c.sweep.seeds);
    s.field("retrain", c.sweep.retrain);
    s.field("checkpoints", c.sweep.checkpoints);
  });
}

}  // namespace

EnvConfig RunConfig::env_for(const std::string& kind) const {
  EnvConfig e = env;
  e.mode = agent_mode(kind);
  return e;
}

void RunConfig::validate() const {
  agent_mode(agent_kind);
  env.validate();
  agent.validate();
  if (episode_max == 0) throw ConfigError("config: episode_max must be >= 1");
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
  for (const auto& k : sweep.agents) agent_mode(k);
  for (const auto& [k, p] : sweep.checkpoints) agent_mode(k);
  if (!(surrogate_grid.u_step > 0 && surrogate_grid.sinr_step_db > 0)) {
    throw ConfigError("config: semantic.surrogate steps must be > 0");
  }
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  Reader r(j, "");
  visit(r, c);
  r.finish();
  // The surrogate table always spans the configured u range.
  c.surrogate_grid.u_min = c.env.semantic.u_min;
  c.surrogate_grid.u_max = c.env.semantic.u_max;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_run_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json to_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  nlohmann::json j;
  Writer w(j);
  visit(w, copy);
  return j;
}

}  // namespace semshare
