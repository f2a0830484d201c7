#include "semshare/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "semshare/errors.hpp"

namespace semshare {

namespace {

std::vector<std::size_t> sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

void check_kind(const nlohmann::json& j, const std::string& kind) {
  const auto got = j.at("agent_kind").get<std::string>();
  if (got != kind) throw ConfigError("checkpoint: agent_kind is '" + got + "', expected '" + kind + "'");
}

void check_layers(const DenseNet& loaded, const DenseNet& expected, const char* field) {
  if (loaded.layer_sizes() != expected.layer_sizes()) {
    throw ConfigError(std::string("checkpoint: ") + field + " layer_sizes do not match config");
  }
}

constexpr double kEdge = 1.0 - 1e-9;

}  // namespace

std::pair<std::size_t, std::size_t> DiscreteActionSpec::decode(std::size_t index) const {
  if (index >= size()) throw UsageError("DiscreteActionSpec: index out of range");
  return {index / powers, index % powers};
}

std::size_t DiscreteActionSpec::encode(std::size_t band, std::size_t power) const {
  if (band >= bands || power >= powers) throw UsageError("DiscreteActionSpec: component out of range");
  return band * powers + power;
}

std::vector<std::pair<std::size_t, std::size_t>> random_act(const DiscreteActionSpec& spec, std::size_t q, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out(q);
  for (auto& a : out) a = spec.decode(rng.index(spec.size()));
  return out;
}

RandomAgent::RandomAgent(const EnvConfig& env, PayloadMode mode, std::uint64_t seed)
    : env_(env), mode_(mode), spec_{env.w, env.power_levels_dbm.size()}, rng_(Rng::derive(seed, 13)) {}

std::vector<LinkAction> RandomAgent::act(const Observation& /*obs*/, bool /*explore*/) {
  if (mode_ == PayloadMode::bits) {
    std::vector<LinkAction> out(env_.q);
    const auto picks = random_act(spec_, env_.q, rng_);
    for (std::size_t k = 0; k < env_.q; ++k) {
      out[k].band = picks[k].first;
      out[k].power_index = picks[k].second;
      out[k].u = env_.u_bits;
    }
    return out;
  }
  std::vector<double> raw(3 * env_.q);
  for (double& r : raw) r = 2.0 * rng_.uniform_open() - 1.0;
  return map_actions(raw, env_);
}

nlohmann::json RandomAgent::save() const { return {{"agent_kind", kind()}, {"rng", rng_.state()}}; }

void RandomAgent::load(const nlohmann::json& j) {
  check_kind(j, kind());
  rng_.set_state(j.at("rng").get<std::string>());
}

std::vector<double> ddqn_target(const DenseNet& online, const DenseNet& target, const std::vector<double>& next_states,
                                const std::vector<double>& rewards, const std::vector<double>& done, std::size_t batch,
                                double gamma) {
  if (rewards.size() != batch || done.size() != batch) throw UsageError("ddqn_target: shape mismatch");
  const std::size_t n_act = online.out_dim();
  const auto qo = online.predict(next_states, batch);
  const auto qt = target.predict(next_states, batch);
  std::vector<double> y(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row = qo.begin() + static_cast<std::ptrdiff_t>(b * n_act);
    const auto best = static_cast<std::size_t>(std::max_element(row, row + static_cast<std::ptrdiff_t>(n_act)) - row);
    y[b] = rewards[b] + gamma * (1.0 - done[b]) * qt[b * n_act + best];
  }
  return y;
}

double ddqn_loss(const DenseNet& q, const std::vector<double>& states, const std::vector<double>& actions,
                 std::size_t batch, const std::vector<double>& target, std::vector<double>* grad) {
  if (actions.size() != batch || target.size() != batch) throw UsageError("ddqn_loss: shape mismatch");
  const std::size_t n_act = q.out_dim();
  Tape tape;
  q.forward(states, batch, tape);
  const double inv = 1.0 / static_cast<double>(batch);
  std::vector<double> dy(batch * n_act, 0.0);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto a = static_cast<std::size_t>(actions[b]);
    if (a >= n_act) throw UsageError("ddqn_loss: action index out of range");
    const double e = tape.output()[b * n_act + a] - target[b];
    loss += e * e * inv;
    dy[b * n_act + a] = 2.0 * e * inv;
  }
  if (!std::isfinite(loss)) throw NumericalError("ddqn_loss: non-finite loss");
  if (grad) q.backward(tape, dy, grad->data(), nullptr);
  return loss;
}

DdqnAgent::DdqnAgent(const EnvConfig& env, const AgentConfig& cfg, std::uint64_t seed)
    : env_(env),
      cfg_(cfg),
      spec_{env.w, env.power_levels_dbm.size()},
      per_link_(env.obs_per_link()),
      online_(sizes(per_link_, cfg.hidden, spec_.size())),
      buffer_(cfg.buffer_capacity, per_link_, 1),
      rng_(Rng::derive(seed, 17)) {
  cfg_.validate();
  online_.init(rng_, cfg_.final_layer_init);
  target_ = online_;
  opt_ = Adam(online_.param_count(), AdamConfig{cfg_.lr_q});
  explore_rate_ = cfg_.exploration.start;
}

void DdqnAgent::begin_episode(std::size_t episode, std::size_t episode_max) {
  explore_rate_ = cfg_.exploration.at(episode, episode_max);
}

std::vector<LinkAction> DdqnAgent::act(const Observation& obs, bool explore) {
  if (obs.values.size() != env_.obs_dim()) throw UsageError("DdqnAgent: observation size mismatch");
  const std::size_t q = env_.q;
  const auto values = online_.predict(obs.values, q);
  last_action_.assign(q, 0);
  std::vector<LinkAction> out(q);
  const bool warmup = explore && env_steps_ < cfg_.explore_steps;
  for (std::size_t k = 0; k < q; ++k) {
    std::size_t a = 0;
    if (explore && (warmup || rng_.uniform() < explore_rate_)) {
      a = rng_.index(spec_.size());
    } else {
      const auto row = values.begin() + static_cast<std::ptrdiff_t>(k * spec_.size());
      a = static_cast<std::size_t>(std::max_element(row, row + static_cast<std::ptrdiff_t>(spec_.size())) - row);
    }
    last_action_[k] = a;
    const auto [band, power] = spec_.decode(a);
    out[k].band = band;
    out[k].power_index = power;
    out[k].u = env_.u_bits;
  }
  return out;
}

void DdqnAgent::record(const Observation& s, double reward, const Observation& next, bool done) {
  for (std::size_t k = 0; k < env_.q; ++k) {
    const double a = static_cast<double>(last_action_[k]);
    buffer_.add(s.link(k), &a, reward, next.link(k), done);
  }
  ++env_steps_;
}

UpdateStats DdqnAgent::train_step() {
  const std::size_t threshold = std::max(cfg_.buffer_threshold, cfg_.batch_size);
  if (buffer_.size() < threshold || env_steps_ % cfg_.update_every != 0) return {};
  return update(buffer_.sample(cfg_.batch_size, rng_));
}

UpdateStats DdqnAgent::update(const Batch& batch) {
  UpdateStats st;
  st.updated = true;
  const auto r = normalize_rewards(batch.rewards, cfg_.reward_scale);
  const auto y = ddqn_target(online_, target_, batch.next_states, r, batch.done, batch.size, cfg_.gamma);
  std::vector<double> g(online_.param_count(), 0.0);
  st.q_loss1 = ddqn_loss(online_, batch.states, batch.actions, batch.size, y, &g);
  opt_.apply(online_.params(), g);
  ++updates_;
  if (cfg_.hard_sync_every > 0) {
    if (updates_ % cfg_.hard_sync_every == 0) target_ = online_;
  } else if (updates_ >= cfg_.iteration_threshold) {
    soft_update(target_.params(), online_.params(), cfg_.tau);
  }
  st.epsilon = explore_rate_;
  return st;
}

nlohmann::json DdqnAgent::save() const {
  return {{"agent_kind", kind()}, {"online", online_},          {"target", target_},
          {"opt", opt_},          {"rng", rng_.state()},         {"exploration", explore_rate_},
          {"env_steps", env_steps_}, {"updates", updates_}};
}

void DdqnAgent::load(const nlohmann::json& j) {
  check_kind(j, kind());
  DenseNet on = j.at("online").get<DenseNet>();
  DenseNet tg = j.at("target").get<DenseNet>();
  check_layers(on, online_, "online");
  check_layers(tg, online_, "target");
  online_ = std::move(on);
  target_ = std::move(tg);
  opt_ = j.at("opt").get<Adam>();
  rng_.set_state(j.at("rng").get<std::string>());
  explore_rate_ = j.at("exploration").get<double>();
  env_steps_ = j.at("env_steps").get<std::size_t>();
  updates_ = j.at("updates").get<std::size_t>();
}

std::vector<double> ddpg_critic_target(const std::vector<double>& rewards, const std::vector<double>& done,
                                       const std::vector<double>& q_next, double gamma) {
  if (done.size() != rewards.size() || q_next.size() != rewards.size()) {
    throw UsageError("ddpg_critic_target: shape mismatch");
  }
  std::vector<double> y(rewards.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rewards[i] + gamma * (1.0 - done[i]) * q_next[i];
  return y;
}

std::vector<double> ddpg_actions(const DenseNet& actor, const std::vector<double>& states, std::size_t batch) {
  auto a = actor.predict(states, batch);
  for (double& v : a) v = std::tanh(v);
  return a;
}

double ddpg_actor_loss(const DenseNet& actor, const DenseNet& critic, const std::vector<double>& states,
                       std::size_t batch, std::vector<double>* grad) {
  const std::size_t s_dim = actor.in_dim();
  const std::size_t a_dim = actor.out_dim();
  if (critic.in_dim() != s_dim + a_dim || critic.out_dim() != 1) throw UsageError("ddpg_actor_loss: shape mismatch");
  Tape ta;
  actor.forward(states, batch, ta);
  std::vector<double> a = ta.output();
  for (double& v : a) v = std::tanh(v);
  Tape tc;
  critic.forward(concat_rows(states, s_dim, a, a_dim, batch), batch, tc);
  const double inv = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) loss -= tc.output()[b] * inv;
  if (!std::isfinite(loss)) throw NumericalError("ddpg_actor_loss: non-finite loss");
  if (grad) {
    std::vector<double> dx(batch * (s_dim + a_dim));
    critic.backward(tc, std::vector<double>(batch, -inv), nullptr, dx.data());
    std::vector<double> dout(batch * a_dim);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < a_dim; ++i) {
        const double ai = a[b * a_dim + i];
        dout[b * a_dim + i] = dx[b * (s_dim + a_dim) + s_dim + i] * (1.0 - ai * ai);
      }
    }
    actor.backward(ta, dout, grad->data(), nullptr);
  }
  return loss;
}

DdpgAgent::DdpgAgent(const EnvConfig& env, const AgentConfig& cfg, std::uint64_t seed)
    : env_(env),
      cfg_(cfg),
      obs_dim_(env.obs_dim()),
      act_dim_(3 * env.q),
      actor_(sizes(obs_dim_, cfg.hidden, act_dim_)),
      critic_(sizes(obs_dim_ + act_dim_, cfg.hidden, 1)),
      buffer_(cfg.buffer_capacity, obs_dim_, act_dim_),
      rng_(Rng::derive(seed, 19)) {
  cfg_.validate();
  actor_.init(rng_, cfg_.final_layer_init);
  critic_.init(rng_, cfg_.final_layer_init);
  actor_t_ = actor_;
  critic_t_ = critic_;
  opt_actor_ = Adam(actor_.param_count(), AdamConfig{cfg_.lr_policy});
  opt_critic_ = Adam(critic_.param_count(), AdamConfig{cfg_.lr_q});
  explore_rate_ = cfg_.exploration.start;
}

void DdpgAgent::begin_episode(std::size_t episode, std::size_t episode_max) {
  explore_rate_ = cfg_.exploration.at(episode, episode_max);
}

std::vector<double> DdpgAgent::raw_action(const Observation& obs, bool explore) {
  if (obs.values.size() != obs_dim_) throw UsageError("DdpgAgent: observation size mismatch");
  std::vector<double> a(act_dim_);
  auto uniform = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) a[i] = 2.0 * rng_.uniform_open() - 1.0;
  };
  if (explore && env_steps_ < cfg_.explore_steps) {
    uniform(0, act_dim_);
    return a;
  }
  a = ddpg_actions(actor_, obs.values, 1);
  if (!explore) return a;
  if (cfg_.ddpg_noise_std > 0) {
    for (double& v : a) v = std::clamp(v + cfg_.ddpg_noise_std * rng_.normal(), -kEdge, kEdge);
  }
  for (std::size_t k = 0; k < env_.q; ++k) {
    if (rng_.uniform() < explore_rate_) uniform(3 * k, 3 * k + 3);
  }
  return a;
}

std::vector<LinkAction> DdpgAgent::act(const Observation& obs, bool explore) {
  last_action_ = raw_action(obs, explore);
  return map_actions(last_action_, env_);
}

void DdpgAgent::record(const Observation& s, double reward, const Observation& next, bool done) {
  buffer_.add(s.values, last_action_, reward, next.values, done);
  ++env_steps_;
}

UpdateStats DdpgAgent::train_step() {
  const std::size_t threshold = std::max(cfg_.buffer_threshold, cfg_.batch_size);
  if (buffer_.size() < threshold || env_steps_ % cfg_.update_every != 0) return {};
  return update(buffer_.sample(cfg_.batch_size, rng_));
}

UpdateStats DdpgAgent::update(const Batch& batch) {
  const std::size_t n = batch.size;
  UpdateStats st;
  st.updated = true;
  const auto r = normalize_rewards(batch.rewards, cfg_.reward_scale);
  const auto a_next = ddpg_actions(actor_t_, batch.next_states, n);
  const auto q_next = critic_t_.predict(concat_rows(batch.next_states, obs_dim_, a_next, act_dim_, n), n);
  const auto y = ddpg_critic_target(r, batch.done, q_next, cfg_.gamma);

  std::vector<double> gc(critic_.param_count(), 0.0);
  st.q_loss1 = critic_loss(critic_, concat_rows(batch.states, obs_dim_, batch.actions, act_dim_, n), n, y, &gc);
  opt_critic_.apply(critic_.params(), gc);

  std::vector<double> ga(actor_.param_count(), 0.0);
  st.policy_loss = ddpg_actor_loss(actor_, critic_, batch.states, n, &ga);
  opt_actor_.apply(actor_.params(), ga);

  ++updates_;
  if (updates_ >= cfg_.iteration_threshold) {
    soft_update(critic_t_.params(), critic_.params(), cfg_.tau);
    soft_update(actor_t_.params(), actor_.params(), cfg_.tau);
  }
  return st;
}

nlohmann::json DdpgAgent::save() const {
  return {{"agent_kind", kind()},          {"actor", actor_},
          {"critic", critic_},             {"actor_target", actor_t_},
          {"critic_target", critic_t_},    {"opt_actor", opt_actor_},
          {"opt_critic", opt_critic_},     {"rng", rng_.state()},
          {"exploration", explore_rate_},  {"env_steps", env_steps_},
          {"updates", updates_}};
}

void DdpgAgent::load(const nlohmann::json& j) {
  check_kind(j, kind());
  DenseNet a = j.at("actor").get<DenseNet>();
  DenseNet c = j.at("critic").get<DenseNet>();
  DenseNet at = j.at("actor_target").get<DenseNet>();
  DenseNet ct = j.at("critic_target").get<DenseNet>();
  check_layers(a, actor_, "actor");
  check_layers(at, actor_, "actor_target");
  check_layers(c, critic_, "critic");
  check_layers(ct, critic_, "critic_target");
  actor_ = std::move(a);
  critic_ = std::move(c);
  actor_t_ = std::move(at);
  critic_t_ = std::move(ct);
  opt_actor_ = j.at("opt_actor").get<Adam>();
  opt_critic_ = j.at("opt_critic").get<Adam>();
  rng_.set_state(j.at("rng").get<std::string>());
  explore_rate_ = j.at("exploration").get<double>();
  env_steps_ = j.at("env_steps").get<std::size_t>();
  updates_ = j.at("updates").get<std::size_t>();
}

const std::vector<std::string>& agent_kinds() {
  static const std::vector<std::string> kinds{"sac_sc", "sac_bits", "ddpg_sc", "ddqn_bits", "random_bits",
                                              "random_sc"};
  return kinds;
}

PayloadMode agent_mode(const std::string& kind) {
  if (kind == "sac_sc" || kind == "ddpg_sc" || kind == "random_sc") return PayloadMode::semantic;
  if (kind == "sac_bits" || kind == "ddqn_bits" || kind == "random_bits") return PayloadMode::bits;
  std::string list;
  for (const auto& k : agent_kinds()) list += (list.empty() ? "" : ", ") + k;
  throw ConfigError("unknown agent_kind '" + kind + "' (supported: " + list + ")");
}

std::unique_ptr<Agent> make_agent(const std::string& kind, const EnvConfig& env, const AgentConfig& cfg,
                                  std::uint64_t seed) {
  const PayloadMode mode = agent_mode(kind);
  if (env.mode != mode) throw ConfigError("agent_kind '" + kind + "' needs the matching payload mode");
  if (kind == "sac_sc" || kind == "sac_bits") return std::make_unique<SacAgent>(env, cfg, mode, seed);
  if (kind == "ddpg_sc") return std::make_unique<DdpgAgent>(env, cfg, seed);
  if (kind == "ddqn_bits") return std::make_unique<DdqnAgent>(env, cfg, seed);
  return std::make_unique<RandomAgent>(env, mode, seed);
}

}  // namespace semshare
