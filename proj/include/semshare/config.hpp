#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semshare/environment.hpp"
#include "semshare/sac.hpp"
#include "semshare/semantic.hpp"

namespace semshare {

struct SweepConfig {
  std::string parameter;  // demand_multiplier | v2i_power_dbm | u_bits | n_vehicles
  std::vector<double> values;
  std::vector<std::string> agents;  // empty: the run's agent_kind
  std::vector<std::uint64_t> seeds;  // test seeds; empty: test_seed
  bool retrain = false;
  std::vector<std::pair<std::string, std::string>> checkpoints;  // agent_kind -> path
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::uint64_t test_seed = 1001;
  std::string agent_kind = "sac_sc";
  std::size_t episode_max = 1000;
  std::size_t episode_test = 100;
  std::size_t checkpoint_every = 0;  // episodes; 0 = only at the end
  bool step_metrics = false;         // write the per-step metrics CSV during testing
  std::string output_dir = "out";
  std::string similarity_table;      // CSV path; empty = surrogate
  SurrogateParams surrogate;
  SimilarityGrid surrogate_grid;
  EnvConfig env;
  AgentConfig agent;
  SweepConfig sweep;

  // Env config with the payload mode of agent_kind.
  EnvConfig env_for(const std::string& kind) const;
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are a ConfigError naming
// their dotted location.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace semshare
