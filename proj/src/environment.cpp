#include "semshare/environment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "semshare/errors.hpp"

namespace semshare {

namespace {

constexpr double kGainFloorDb = -200.0;

double to_db(double linear, double floor_db) {
  if (!(linear > 0)) return floor_db;
  return std::max(10.0 * std::log10(linear), floor_db);
}

std::size_t map_index(double raw, std::size_t n) {
  const double x = std::floor((raw + 1.0) / 2.0 * static_cast<double>(n));
  if (!(x > 0)) return 0;  // also catches NaN
  return std::min(static_cast<std::size_t>(x), n - 1);
}

}  // namespace

void EnvConfig::validate() const {
  grid.validate();
  turns.validate();
  channel.validate();
  semantic.validate();
  if (w == 0) throw ConfigError("env: w must be >= 1");
  if (n_vehicles < q + w) {
    throw ConfigError("env: n_vehicles (" + std::to_string(n_vehicles) + ") must be >= q + w (" +
                      std::to_string(q + w) + ")");
  }
  if (!(step_dt > 0)) throw ConfigError("env: step_dt must be > 0");
  if (steps_per_episode == 0) throw ConfigError("env: steps_per_episode must be >= 1");
  if (std::abs(time_budget - steps_per_episode * step_dt) > 1e-9 * std::max(1.0, time_budget)) {
    throw ConfigError("env: time_budget must equal steps_per_episode * step_dt");
  }
  if (!(demand_multiplier >= 0)) throw ConfigError("env: demand_multiplier must be >= 0");
  if (!(demand_base > 0)) throw ConfigError("env: demand_base must be > 0");
  if (!(u_ref > 0)) throw ConfigError("env: u_ref must be > 0");
  if (!(v2i_u >= semantic.u_min && v2i_u <= semantic.u_max)) {
    throw ConfigError("env: v2i_u must lie in [u_min, u_max]");
  }
  if (!(u_bits > 0)) throw ConfigError("env: u_bits must be > 0");
  if (!(xi_threshold >= 0 && xi_threshold <= 1)) throw ConfigError("env: xi_threshold must lie in [0, 1]");
  if (power_levels_dbm.empty()) throw ConfigError("env: power_levels_dbm is empty");
  for (std::size_t i = 1; i < power_levels_dbm.size(); ++i) {
    if (!(power_levels_dbm[i] > power_levels_dbm[i - 1])) {
      throw ConfigError("env: power_levels_dbm must be strictly increasing");
    }
  }
  if (!(lambda_weight >= 0 && lambda_weight <= 1)) throw ConfigError("env: lambda_weight must lie in [0, 1]");
  if (!(varpi >= varpi_lower_bound() - 1e-12)) {
    throw ConfigError("env: varpi must be >= ratio * q / u_min = " + std::to_string(varpi_lower_bound()));
  }
  if (refresh_period == 0) throw ConfigError("env: refresh_period must be >= 1");
  if (!(refresh_dt >= 0)) throw ConfigError("env: refresh_dt must be >= 0");
  if (!(obs_gain_scale_db > 0) || !(obs_sinr_scale_db > 0)) throw ConfigError("env: observation scales must be > 0");
  if (!(speed >= 0)) throw ConfigError("env: speed must be >= 0");
}

double EnvConfig::varpi_lower_bound() const {
  return semantic.info_per_sentence_ratio * static_cast<double>(q) / semantic.u_min;
}

double EnvConfig::initial_demand() const {
  const double suts = demand_multiplier * demand_base / u_ref;
  return mode == PayloadMode::semantic ? suts : suts * u_ref;
}

LinkAction map_action(double band_raw, double power_raw, double u_raw, std::size_t w, std::size_t n_power,
                      double u_min, double u_max) {
  LinkAction a;
  a.band = map_index(band_raw, w);
  a.power_index = map_index(power_raw, n_power);
  double u = std::round(u_min + (u_raw + 1.0) / 2.0 * (u_max - u_min));
  if (std::isnan(u)) u = u_min;
  a.u = std::clamp(u, u_min, u_max);
  return a;
}

std::vector<LinkAction> map_actions(const std::vector<double>& raw, const EnvConfig& cfg) {
  if (raw.size() != 3 * cfg.q) throw UsageError("map_actions: expected 3 values per link");
  std::vector<LinkAction> out(cfg.q);
  for (std::size_t k = 0; k < cfg.q; ++k) {
    out[k] = map_action(raw[3 * k], raw[3 * k + 1], raw[3 * k + 2], cfg.w, cfg.power_levels_dbm.size(),
                        cfg.semantic.u_min, cfg.semantic.u_max);
  }
  return out;
}

std::vector<LinkAction> map_actions_bits(const std::vector<double>& raw, const EnvConfig& cfg) {
  if (raw.size() != 2 * cfg.q) throw UsageError("map_actions_bits: expected 2 values per link");
  std::vector<LinkAction> out(cfg.q);
  for (std::size_t k = 0; k < cfg.q; ++k) {
    out[k].band = map_index(raw[2 * k], cfg.w);
    out[k].power_index = map_index(raw[2 * k + 1], cfg.power_levels_dbm.size());
    out[k].u = cfg.u_bits;
  }
  return out;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Sinrs compute_sinrs(const ChannelRealization& real, const std::vector<LinkAssignment>& links,
                    double v2i_power_w, double noise_w) {
  const std::size_t q = real.q;
  const std::size_t w = real.w;
  if (links.size() != q) throw UsageError("compute_sinrs: one assignment per V2V link required");
  for (const auto& l : links) {
    if (l.band >= w) throw UsageError("compute_sinrs: band out of range");
  }
  Sinrs s;
  s.v2i.assign(w, 0.0);
  s.v2v.assign(q, 0.0);

  std::vector<double> v2i_interf(w, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    v2i_interf[links[k].band] += links[k].power_w * real.v2v_to_bs(k, links[k].band);
  }
  for (std::size_t b = 0; b < w; ++b) {
    s.v2i[b] = v2i_power_w * real.v2i(b) / (noise_w + v2i_interf[b]);
  }
  for (std::size_t k = 0; k < q; ++k) {
    const std::size_t b = links[k].band;
    double interf = v2i_power_w * real.v2i_to_v2v(b, k);
    for (std::size_t j = 0; j < q; ++j) {
      if (j != k && links[j].band == b) interf += links[j].power_w * real.cross(j, k, b);
    }
    s.v2v[k] = links[k].power_w * real.v2v(k, b) / (noise_w + interf);
  }
  return s;
}

Environment::Environment(EnvConfig cfg, std::uint64_t seed, std::shared_ptr<const SimilarityModel> model)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      mobility_rng_(Rng::derive(seed, 1)),
      channel_rng_(Rng::derive(seed, 2)) {
  cfg_.validate();
  if (!model_) model_ = std::make_shared<const SimilarityModel>(default_similarity_model());
  if (model_->u_lo() > cfg_.semantic.u_min || model_->u_hi() < cfg_.semantic.u_max) {
    throw ConfigError("env: similarity table does not cover [u_min, u_max]");
  }
  scenario_ = init_scenario(cfg_.grid, cfg_.n_vehicles, cfg_.q + cfg_.w, mobility_rng_, cfg_.speed);
  scenario_.topology = select_topology(scenario_, cfg_.q, cfg_.w, mobility_rng_, cfg_.bs_position);
  fading_ = init_fading(scenario_.vehicles, cfg_.channel, channel_rng_);
  large_ = compute_large_scale(scenario_.topology, scenario_.vehicles, fading_, cfg_.channel);
  real_ = realize(large_, channel_rng_);
  remaining_.assign(cfg_.q, 0.0);
  prev_v2i_sinr_.assign(cfg_.w, 0.0);
  prev_v2v_sinr_.assign(cfg_.q, 0.0);
  prev_u_.assign(cfg_.q, cfg_.mode == PayloadMode::semantic ? cfg_.u_ref : cfg_.u_bits);
}

void Environment::refresh_large_scale() {
  scenario_ = step_positions(scenario_, cfg_.refresh_dt, cfg_.turns, mobility_rng_);
  update_fading(fading_, scenario_, cfg_.channel, channel_rng_);
  if (cfg_.reselect_topology) {
    scenario_.topology = select_topology(scenario_, cfg_.q, cfg_.w, mobility_rng_, cfg_.bs_position);
  }
  large_ = compute_large_scale(scenario_.topology, scenario_.vehicles, fading_, cfg_.channel);
}

Observation Environment::reset(std::size_t episode, double episode_fraction, double exploration) {
  if (episode > 0 && episode % cfg_.refresh_period == 0) refresh_large_scale();
  episode_ = episode;
  step_ = 0;
  started_ = true;
  episode_fraction_ = episode_fraction;
  exploration_ = exploration;
  remaining_.assign(cfg_.q, cfg_.initial_demand());
  real_ = realize(large_, channel_rng_);

  // Previous-step features start from an idle channel: V2I alone, V2V silent.
  const double noise = dbm_to_watts(cfg_.noise_dbm);
  const double p_v2i = dbm_to_watts(cfg_.v2i_power_dbm);
  for (std::size_t b = 0; b < cfg_.w; ++b) prev_v2i_sinr_[b] = p_v2i * real_.v2i(b) / noise;
  std::fill(prev_v2v_sinr_.begin(), prev_v2v_sinr_.end(), 0.0);
  std::fill(prev_u_.begin(), prev_u_.end(), cfg_.mode == PayloadMode::semantic ? cfg_.u_ref : cfg_.u_bits);

  stats_ = EpisodeStats{};
  stats_.success.assign(cfg_.q, false);
  stats_.completion_step.assign(cfg_.q, -1);
  if (cfg_.initial_demand() <= 0) {
    for (std::size_t k = 0; k < cfg_.q; ++k) {
      stats_.success[k] = true;
      stats_.completion_step[k] = 0;
    }
  }
  return observe();
}

void Environment::set_schedule_features(double episode_fraction, double exploration) {
  episode_fraction_ = episode_fraction;
  exploration_ = exploration;
}

void Environment::set_realization(const ChannelRealization& real) {
  if (real.q != real_.q || real.w != real_.w || real.g_v2i.size() != real_.g_v2i.size() ||
      real.g_v2v.size() != real_.g_v2v.size() || real.g_v2v_to_bs.size() != real_.g_v2v_to_bs.size() ||
      real.g_v2i_to_v2v.size() != real_.g_v2i_to_v2v.size() || real.g_cross.size() != real_.g_cross.size()) {
    throw UsageError("set_realization: dimension mismatch");
  }
  real_ = real;
}

double Environment::remaining_time() const {
  return std::max(0.0, cfg_.time_budget - static_cast<double>(step_) * cfg_.step_dt);
}

Observation Environment::observe() const {
  const std::size_t q = cfg_.q;
  const std::size_t w = cfg_.w;
  Observation obs;
  obs.per_link = cfg_.obs_per_link();
  obs.values.reserve(cfg_.obs_dim());
  auto gain = [&](double g) {
    return (to_db(g, kGainFloorDb) - cfg_.obs_gain_center_db) / cfg_.obs_gain_scale_db;
  };
  auto sinr = [&](double s) { return to_db(s, cfg_.obs_sinr_floor_db) / cfg_.obs_sinr_scale_db; };
  const double u_span = cfg_.semantic.u_max;
  const double sd0 = cfg_.initial_demand();
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t b = 0; b < w; ++b) obs.values.push_back(gain(real_.v2v(k, b)));
    for (std::size_t j = 0; j < q; ++j) {
      if (j == k) continue;
      for (std::size_t b = 0; b < w; ++b) obs.values.push_back(gain(real_.cross(j, k, b)));
    }
    for (std::size_t b = 0; b < w; ++b) obs.values.push_back(gain(real_.v2i_to_v2v(b, k)));
    for (std::size_t b = 0; b < w; ++b) obs.values.push_back(gain(real_.v2v_to_bs(k, b)));
    for (std::size_t b = 0; b < w; ++b) obs.values.push_back(sinr(prev_v2i_sinr_[b]));
    obs.values.push_back(sinr(prev_v2v_sinr_[k]));
    obs.values.push_back(cfg_.v2i_u / u_span);
    obs.values.push_back(prev_u_[k] / u_span);
    obs.values.push_back(sd0 > 0 ? std::max(remaining_[k], 0.0) / sd0 : 0.0);
    obs.values.push_back(remaining_time() / cfg_.time_budget);
    obs.values.push_back(episode_fraction_);
    obs.values.push_back(exploration_);
  }
  return obs;
}

double Environment::link_rate(double u, double sinr, double* xi) const {
  if (cfg_.mode == PayloadMode::bits) {
    *xi = 1.0;
    return cfg_.semantic.bandwidth_hz * std::log2(1.0 + sinr);
  }
  *xi = similarity(*model_, u, to_db(sinr, -1e300));
  // Below the similarity threshold the receiver cannot use the sentence.
  if (*xi < cfg_.xi_threshold) return 0.0;
  return hsr(cfg_.semantic, u, *xi);
}

StepResult Environment::step(const std::vector<LinkAction>& actions) {
  if (!started_) throw UsageError("step: reset() has not been called");
  if (done()) throw UsageError("step: episode already finished; call reset()");
  const std::size_t q = cfg_.q;
  const std::size_t w = cfg_.w;
  if (actions.size() != q) throw UsageError("step: expected one action per V2V link");

  StepResult res;
  res.links.resize(q);
  std::vector<LinkAssignment> assign(q);
  std::vector<std::size_t> band_users(w, 0);
  for (std::size_t k = 0; k < q; ++k) {
    const LinkAction& a = actions[k];
    if (a.band >= w || a.power_index >= cfg_.power_levels_dbm.size()) {
      throw UsageError("step: action index out of range");
    }
    if (cfg_.mode == PayloadMode::semantic && !(a.u >= cfg_.semantic.u_min && a.u <= cfg_.semantic.u_max)) {
      throw UsageError("step: u outside [u_min, u_max]");
    }
    LinkStep& ls = res.links[k];
    ls.band = a.band;
    ls.power_dbm = cfg_.power_levels_dbm[a.power_index];
    ls.u = cfg_.mode == PayloadMode::semantic ? a.u : cfg_.u_bits;
    ls.active = remaining_[k] > 0;
    assign[k].band = a.band;
    const bool off = ls.power_dbm <= cfg_.off_power_dbm;
    assign[k].power_w = (ls.active && !off) ? dbm_to_watts(ls.power_dbm) : 0.0;
    if (ls.active) ++band_users[a.band];
  }
  for (std::size_t b = 0; b < w; ++b) {
    if (band_users[b] > 1) ++res.band_collisions;
  }

  const double noise = dbm_to_watts(cfg_.noise_dbm);
  const Sinrs s = compute_sinrs(real_, assign, dbm_to_watts(cfg_.v2i_power_dbm), noise);

  const double ratio = cfg_.semantic.info_per_sentence_ratio;
  res.v2i_sinr = s.v2i;
  res.v2i_hsse.assign(w, 0.0);
  for (std::size_t b = 0; b < w; ++b) {
    if (cfg_.mode == PayloadMode::semantic) {
      const double xi = similarity(*model_, cfg_.v2i_u, to_db(s.v2i[b], -1e300));
      res.v2i_hsse[b] = hsse(cfg_.semantic, cfg_.v2i_u, xi);
    } else {
      res.v2i_hsse[b] = bit_equivalent_hsse(s.v2i[b], cfg_.u_bits, ratio);
    }
    res.hsse_v2i_sum += res.v2i_hsse[b];
  }
  res.r1 = res.hsse_v2i_sum;

  ++step_;
  for (std::size_t k = 0; k < q; ++k) {
    LinkStep& ls = res.links[k];
    ls.sinr = s.v2v[k];
    if (!ls.active) {
      ls.xi = cfg_.mode == PayloadMode::semantic ? 0.0 : 1.0;
      ls.remaining = 0.0;
      res.r2 += cfg_.varpi;
      continue;
    }
    ls.rate = link_rate(ls.u, ls.sinr, &ls.xi);
    if (cfg_.mode == PayloadMode::semantic) {
      ls.hsse = ls.rate / cfg_.semantic.bandwidth_hz;
    } else {
      ls.hsse = bit_equivalent_hsse(ls.sinr, cfg_.u_bits, ratio);
    }
    res.r2 += ls.hsse;
    ls.delivered = std::min(remaining_[k], ls.rate * cfg_.step_dt);
    remaining_[k] = std::max(0.0, remaining_[k] - ls.delivered);
    // Residues below a millionth of a unit count as delivered.
    if (remaining_[k] < 1e-6) remaining_[k] = 0.0;
    ls.remaining = remaining_[k];
    if (remaining_[k] == 0.0) {
      ls.completed = true;
      stats_.success[k] = true;
      stats_.completion_step[k] = static_cast<long>(step_);
    }
  }
  res.reward = cfg_.lambda_weight * res.r1 + (1.0 - cfg_.lambda_weight) * res.r2;
  if (!std::isfinite(res.reward)) throw NumericalError("step: non-finite reward");

  for (std::size_t b = 0; b < w; ++b) prev_v2i_sinr_[b] = s.v2i[b];
  for (std::size_t k = 0; k < q; ++k) {
    prev_v2v_sinr_[k] = s.v2v[k];
    prev_u_[k] = res.links[k].u;
  }
  stats_.hsse_v2i_sum += res.hsse_v2i_sum;
  stats_.reward_sum += res.reward;
  stats_.r1_sum += res.r1;
  stats_.r2_sum += res.r2;
  stats_.band_collisions += res.band_collisions;
  ++stats_.steps;

  // The next decision sees a fresh small-scale draw.
  real_ = realize(large_, channel_rng_);
  res.done = done();
  res.observation = observe();
  return res;
}

nlohmann::json Environment::save_state() const {
  nlohmann::json pos = nlohmann::json::array();
  for (const Vec2& p : fading_.last_positions) pos.push_back({p.x, p.y});
  return nlohmann::json{{"scenario", scenario_},
                        {"shadow_bs_db", fading_.vehicle_bs_db},
                        {"shadow_pair_db", fading_.vehicle_pair_db},
                        {"shadow_positions", pos},
                        {"mobility_rng", mobility_rng_.state()},
                        {"channel_rng", channel_rng_.state()}};
}

void Environment::load_state(const nlohmann::json& j) {
  ScenarioState sc = j.at("scenario").get<ScenarioState>();
  if (sc.vehicles.size() != cfg_.n_vehicles || sc.topology.v2v_pairs.size() != cfg_.q ||
      sc.topology.v2i_users.size() != cfg_.w) {
    throw ConfigError("checkpoint: environment state does not match scenario config");
  }
  FadingState f;
  f.vehicle_bs_db = j.at("shadow_bs_db").get<std::vector<double>>();
  f.vehicle_pair_db = j.at("shadow_pair_db").get<std::vector<double>>();
  for (const auto& p : j.at("shadow_positions")) f.last_positions.push_back(Vec2{p.at(0).get<double>(), p.at(1).get<double>()});
  const std::size_t n = sc.vehicles.size();
  if (f.vehicle_bs_db.size() != n || f.vehicle_pair_db.size() != n * n || f.last_positions.size() != n) {
    throw ConfigError("checkpoint: shadowing state has the wrong size");
  }
  sc.grid = cfg_.grid;
  scenario_ = std::move(sc);
  fading_ = std::move(f);
  mobility_rng_.set_state(j.at("mobility_rng").get<std::string>());
  channel_rng_.set_state(j.at("channel_rng").get<std::string>());
  large_ = compute_large_scale(scenario_.topology, scenario_.vehicles, fading_, cfg_.channel);
  started_ = false;
}

void Environment::write_metrics_header(std::ostream& os) {
  os << "episode,step,link,band,power_dbm,u,sinr_db,xi,hsse_v2i_sum,hsr_v2v,sd_remaining,reward\n";
}

void Environment::write_metrics(std::ostream& os, const StepResult& r) const {
  for (std::size_t k = 0; k < r.links.size(); ++k) {
    const LinkStep& l = r.links[k];
    os << episode_ << ',' << step_ << ',' << k << ',' << l.band << ',' << l.power_dbm << ',' << l.u << ','
       << to_db(l.sinr, -300.0) << ',' << l.xi << ',' << r.hsse_v2i_sum << ',' << l.rate << ',' << l.remaining
       << ',' << r.reward << '\n';
  }
}

}  // namespace semshare
