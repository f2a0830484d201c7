#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "semshare/channel.hpp"
#include "semshare/mobility.hpp"
#include "semshare/rng.hpp"
#include "semshare/semantic.hpp"

namespace semshare {

// semantic: payload in suts, link rate from the similarity model.
// bits: payload in bits, link rate from Shannon capacity.
enum class PayloadMode { semantic, bits };

struct EnvConfig {
  std::size_t q = 4;  // V2V links
  std::size_t w = 4;  // V2I links = sub-bands
  std::size_t n_vehicles = 20;
  GridSpec grid;
  TurnProbabilities turns;
  ChannelConfig channel;
  SemanticConfig semantic;
  Vec2 bs_position{525.5, 649.5};
  double speed = 10.0;

  double step_dt = 0.001;
  std::size_t steps_per_episode = 100;
  double time_budget = 0.1;
  double demand_multiplier = 25.0;
  double demand_base = 1060.0;  // SD = k * demand_base / u_ref
  double u_ref = 20.0;
  double v2i_u = 20.0;          // symbols per word on the V2I links
  double u_bits = 20.0;         // bits per word for the bit-based agents
  double xi_threshold = 0.9;
  std::vector<double> power_levels_dbm{-100.0, 5.0, 10.0, 23.0};
  double off_power_dbm = -100.0;  // levels at or below this transmit nothing
  double v2i_power_dbm = 23.0;
  double noise_dbm = -114.0;
  double lambda_weight = 0.5;
  double varpi = 0.8;  // per completed link, in suts/s/Hz

  std::size_t refresh_period = 20;  // episodes between position updates
  double refresh_dt = 0.1;          // mobility step applied at a refresh
  bool reselect_topology = true;

  // Observation encoding: gain_dB -> (gain_dB - center) / scale,
  // sinr_dB -> max(sinr_dB, floor) / scale.
  double obs_gain_center_db = -100.0;
  double obs_gain_scale_db = 20.0;
  double obs_sinr_floor_db = -30.0;
  double obs_sinr_scale_db = 30.0;

  PayloadMode mode = PayloadMode::semantic;

  void validate() const;
  // Largest per-step sum of V2V HSSE: ratio * Q / u_min.
  double varpi_lower_bound() const;
  double initial_demand() const;  // suts (semantic) or bits, per link
  std::size_t obs_per_link() const { return (q + 3) * w + 7; }
  std::size_t obs_dim() const { return q * obs_per_link(); }
};

// Flattened observation. Link q's block starts at q * per_link and holds, in
// order: own gains [W]; gains from every other tx into this rx, by tx then
// band [(Q-1) W]; V2I-user-to-this-rx gains [W]; this-tx-to-BS gains [W];
// previous V2I SINRs [W]; previous own SINR; V2I u; previous own u;
// SD/SD0; T/T0; episode fraction; exploration parameter.
struct Observation {
  std::size_t per_link = 0;
  std::vector<double> values;

  const double* link(std::size_t q) const { return values.data() + q * per_link; }
};

struct LinkAction {
  std::size_t band = 0;
  std::size_t power_index = 0;
  double u = 20.0;
};

// raw in (-1, 1)^3 per link; clamping makes the mapping total.
LinkAction map_action(double band_raw, double power_raw, double u_raw, std::size_t w, std::size_t n_power,
                      double u_min, double u_max);
std::vector<LinkAction> map_actions(const std::vector<double>& raw, const EnvConfig& cfg);
// Two raw values per link (band, power); u is fixed to cfg.u_bits.
std::vector<LinkAction> map_actions_bits(const std::vector<double>& raw, const EnvConfig& cfg);

double dbm_to_watts(double dbm);

struct LinkAssignment {
  std::size_t band = 0;
  double power_w = 0.0;
};

struct Sinrs {
  std::vector<double> v2i;  // [W], linear
  std::vector<double> v2v;  // [Q], linear
};

Sinrs compute_sinrs(const ChannelRealization& real, const std::vector<LinkAssignment>& links,
                    double v2i_power_w, double noise_w);

struct LinkStep {
  std::size_t band = 0;
  double power_dbm = 0.0;
  double u = 0.0;
  double sinr = 0.0;  // linear
  double xi = 0.0;    // 1 in bits mode
  double rate = 0.0;  // effective suts/s or bits/s
  double hsse = 0.0;  // effective suts/s/Hz (bit-equivalent in bits mode)
  double delivered = 0.0;
  double remaining = 0.0;
  bool active = false;  // had demand left at the start of the step
  bool completed = false;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  bool done = false;
  std::vector<LinkStep> links;
  std::vector<double> v2i_sinr;
  std::vector<double> v2i_hsse;
  double hsse_v2i_sum = 0.0;
  std::size_t band_collisions = 0;  // bands shared by two or more active V2V links
};

struct EpisodeStats {
  std::vector<bool> success;             // per link
  std::vector<long> completion_step;     // 1-based, -1 if never
  double hsse_v2i_sum = 0.0;             // summed over steps
  double reward_sum = 0.0;
  double r1_sum = 0.0;
  double r2_sum = 0.0;
  std::size_t steps = 0;
  std::size_t band_collisions = 0;
};

class Environment {
 public:
  Environment(EnvConfig cfg, std::uint64_t seed, std::shared_ptr<const SimilarityModel> model = nullptr);

  const EnvConfig& config() const { return cfg_; }
  std::size_t obs_dim() const { return cfg_.obs_dim(); }

  // Starts episode `episode` (0-based). Every refresh_period episodes the
  // vehicles move, shadowing evolves and links are re-selected.
  Observation reset(std::size_t episode, double episode_fraction = 0.0, double exploration = 0.0);
  StepResult step(const std::vector<LinkAction>& actions);

  // Updates the last two observation features for subsequent steps.
  void set_schedule_features(double episode_fraction, double exploration);

  bool done() const { return step_ >= cfg_.steps_per_episode; }
  std::size_t step_index() const { return step_; }
  const ScenarioState& scenario() const { return scenario_; }
  const LargeScale& large_scale() const { return large_; }
  const ChannelRealization& realization() const { return real_; }
  // Replaces the current small-scale realization; dimensions must match.
  void set_realization(const ChannelRealization& real);
  const std::vector<double>& remaining() const { return remaining_; }
  double remaining_time() const;
  const EpisodeStats& episode_stats() const { return stats_; }
  const SimilarityModel& similarity_model() const { return *model_; }
  Observation observe() const;

  // Slow-changing state (positions, shadowing, random streams) so that a
  // resumed run continues from the same point.
  nlohmann::json save_state() const;
  void load_state(const nlohmann::json& j);

  // One row per link per step:
  // episode,step,link,band,power_dbm,u,sinr_db,xi,hsse_v2i_sum,hsr_v2v,sd_remaining,reward
  static void write_metrics_header(std::ostream& os);
  void write_metrics(std::ostream& os, const StepResult& r) const;

 private:
  void refresh_large_scale();
  double link_rate(double u, double sinr, double* xi) const;

  EnvConfig cfg_;
  std::shared_ptr<const SimilarityModel> model_;
  Rng mobility_rng_;
  Rng channel_rng_;
  ScenarioState scenario_;
  FadingState fading_;
  LargeScale large_;
  ChannelRealization real_;
  std::vector<double> remaining_;
  std::vector<double> prev_v2i_sinr_;
  std::vector<double> prev_v2v_sinr_;
  std::vector<double> prev_u_;
  std::size_t episode_ = 0;
  std::size_t step_ = 0;
  bool started_ = false;
  double episode_fraction_ = 0.0;
  double exploration_ = 0.0;
  EpisodeStats stats_;
};

}  // namespace semshare
