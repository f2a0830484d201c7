#include "semshare/sac.hpp"

#include <algorithm>
#include <cmath>

#include "semshare/errors.hpp"

namespace semshare {

void AgentConfig::validate() const {
  if (hidden.empty()) throw ConfigError("agent: hidden must list at least one layer width");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("agent: hidden layer widths must be >= 1");
  }
  if (!(lr_q > 0 && lr_policy > 0 && lr_entropy >= 0)) throw ConfigError("agent: learning rates must be > 0");
  if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("agent: gamma must lie in [0, 1]");
  if (!(tau > 0 && tau <= 1)) throw ConfigError("agent: tau must lie in (0, 1]");
  if (!(reward_scale > 0)) throw ConfigError("agent: reward_scale must be > 0");
  if (batch_size == 0) throw ConfigError("agent: batch_size must be >= 1");
  if (buffer_capacity < batch_size) throw ConfigError("agent: buffer_capacity must be >= batch_size");
  if (update_every == 0) throw ConfigError("agent: update_every must be >= 1");
  if (!(initial_epsilon > 0)) throw ConfigError("agent: initial_epsilon must be > 0");
  exploration.validate();
}

std::vector<double> normalize_rewards(const std::vector<double>& rewards, double rs) {
  if (rewards.empty()) throw UsageError("normalize_rewards: empty batch");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = rs * (rewards[i] - mean) / (sd + 1e-6);
  return out;
}

std::vector<double> concat_rows(const std::vector<double>& s, std::size_t s_dim, const std::vector<double>& a,
                                std::size_t a_dim, std::size_t batch) {
  if (s.size() != batch * s_dim || a.size() != batch * a_dim) throw UsageError("concat_rows: shape mismatch");
  std::vector<double> out(batch * (s_dim + a_dim));
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(s.begin() + b * s_dim, s_dim, out.begin() + b * (s_dim + a_dim));
    std::copy_n(a.begin() + b * a_dim, a_dim, out.begin() + b * (s_dim + a_dim) + s_dim);
  }
  return out;
}

std::vector<double> soft_bellman_target(const std::vector<double>& rewards, const std::vector<double>& done,
                                        const std::vector<double>& q1_next, const std::vector<double>& q2_next,
                                        const std::vector<double>& logp_next, double epsilon, double gamma) {
  const std::size_t n = rewards.size();
  if (done.size() != n || q1_next.size() != n || q2_next.size() != n || logp_next.size() != n) {
    throw UsageError("soft_bellman_target: shape mismatch");
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double soft_v = std::min(q1_next[i], q2_next[i]) - epsilon * logp_next[i];
    y[i] = rewards[i] + gamma * (1.0 - done[i]) * soft_v;
  }
  return y;
}

double critic_loss(const DenseNet& q, const std::vector<double>& state_action, std::size_t batch,
                   const std::vector<double>& target, std::vector<double>* grad) {
  if (target.size() != batch || q.out_dim() != 1) throw UsageError("critic_loss: shape mismatch");
  Tape tape;
  q.forward(state_action, batch, tape);
  const auto& out = tape.output();
  double loss = 0.0;
  std::vector<double> dy(batch);
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double e = out[b] - target[b];
    loss += e * e * inv;
    dy[b] = 2.0 * e * inv;
  }
  if (!std::isfinite(loss)) throw NumericalError("critic_loss: non-finite loss");
  if (grad) {
    if (grad->size() != q.param_count()) throw UsageError("critic_loss: gradient buffer size");
    q.backward(tape, dy, grad->data(), nullptr);
  }
  return loss;
}

double policy_loss(const DenseNet& policy, const DenseNet& q1, const DenseNet& q2, const std::vector<double>& states,
                   std::size_t batch, const std::vector<double>& z, double epsilon, std::vector<double>* grad,
                   std::vector<double>* logp) {
  const std::size_t s_dim = policy.in_dim();
  const std::size_t a_dim = policy.out_dim() / 2;
  if (q1.in_dim() != s_dim + a_dim || q2.in_dim() != s_dim + a_dim) throw UsageError("policy_loss: shape mismatch");
  Tape tp;
  policy.forward(states, batch, tp);
  const SquashedGaussian g = SquashedGaussian::with_noise(tp.output(), batch, a_dim, z);
  const auto sa = concat_rows(states, s_dim, g.action, a_dim, batch);
  Tape t1;
  Tape t2;
  q1.forward(sa, batch, t1);
  q2.forward(sa, batch, t2);
  const double inv = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  std::vector<double> dy1(batch, 0.0);
  std::vector<double> dy2(batch, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double a = t1.output()[b];
    const double c = t2.output()[b];
    loss += (epsilon * g.log_prob[b] - std::min(a, c)) * inv;
    (a <= c ? dy1 : dy2)[b] = -inv;
  }
  if (!std::isfinite(loss)) throw NumericalError("policy_loss: non-finite loss");
  if (logp) *logp = g.log_prob;
  if (grad) {
    if (grad->size() != policy.param_count()) throw UsageError("policy_loss: gradient buffer size");
    std::vector<double> dx1(batch * (s_dim + a_dim));
    std::vector<double> dx2(batch * (s_dim + a_dim));
    q1.backward(t1, dy1, nullptr, dx1.data());
    q2.backward(t2, dy2, nullptr, dx2.data());
    std::vector<double> dl_da(batch * a_dim);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < a_dim; ++i) {
        const std::size_t k = b * (s_dim + a_dim) + s_dim + i;
        dl_da[b * a_dim + i] = dx1[k] + dx2[k];
      }
    }
    const std::vector<double> dl_dlogp(batch, epsilon * inv);
    const auto dhead = g.backward(dl_da, dl_dlogp);
    policy.backward(tp, dhead, grad->data(), nullptr);
  }
  return loss;
}

double entropy_loss(double log_eps, const std::vector<double>& logp, double target_entropy, double* grad) {
  if (logp.empty()) throw UsageError("entropy_loss: empty batch");
  double m = 0.0;
  for (double l : logp) m += target_entropy + l;
  m /= static_cast<double>(logp.size());
  if (grad) *grad = -m;
  return -log_eps * m;
}

void soft_update(std::vector<double>& target, const std::vector<double>& online, double tau) {
  if (target.size() != online.size()) throw UsageError("soft_update: size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

SacAgent::SacAgent(const EnvConfig& env, const AgentConfig& cfg, PayloadMode mode, std::uint64_t seed)
    : env_(env),
      cfg_(cfg),
      mode_(mode),
      per_link_(mode == PayloadMode::semantic ? 3 : 2),
      obs_dim_(cfg.shared_links ? env.obs_per_link() : env.obs_dim()),
      act_dim_(cfg.shared_links ? per_link_ : env.q * per_link_),
      target_entropy_(std::isnan(cfg.target_entropy) ? -static_cast<double>(act_dim_) : cfg.target_entropy),
      policy_(layer_sizes(obs_dim_, cfg.hidden, 2 * act_dim_)),
      q1_(layer_sizes(obs_dim_ + act_dim_, cfg.hidden, 1)),
      q2_(layer_sizes(obs_dim_ + act_dim_, cfg.hidden, 1)),
      log_eps_(std::log(cfg.initial_epsilon)),
      buffer_(cfg.buffer_capacity, obs_dim_, act_dim_),
      rng_(Rng::derive(seed, 11)) {
  cfg_.validate();
  if (env.q == 0) throw ConfigError("agent: needs at least one V2V link");
  policy_.init(rng_, cfg_.final_layer_init);
  q1_.init(rng_, cfg_.final_layer_init);
  q2_.init(rng_, cfg_.final_layer_init);
  q1_t_ = q1_;
  q2_t_ = q2_;
  opt_policy_ = Adam(policy_.param_count(), AdamConfig{cfg_.lr_policy});
  opt_q1_ = Adam(q1_.param_count(), AdamConfig{cfg_.lr_q});
  opt_q2_ = Adam(q2_.param_count(), AdamConfig{cfg_.lr_q});
  explore_rate_ = cfg_.exploration.start;
}

double SacAgent::entropy_weight() const { return std::exp(log_eps_); }

void SacAgent::begin_episode(std::size_t episode, std::size_t episode_max) {
  explore_rate_ = cfg_.exploration.at(episode, episode_max);
}

std::vector<double> SacAgent::raw_action(const Observation& obs, bool explore) {
  if (obs.values.size() != env_.obs_dim()) throw UsageError("SacAgent: observation size mismatch");
  const std::size_t rows = cfg_.shared_links ? env_.q : 1;
  const std::size_t width = env_.q * per_link_;
  std::vector<double> a(width);
  auto uniform = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) a[i] = 2.0 * rng_.uniform_open() - 1.0;
  };
  if (explore && env_steps_ < cfg_.explore_steps) {
    uniform(0, width);
    return a;
  }
  Tape t;
  policy_.forward(obs.values, rows, t);
  if (explore) {
    a = SquashedGaussian::sample(t.output(), rows, act_dim_, rng_).action;
    for (std::size_t k = 0; k < env_.q; ++k) {
      if (rng_.uniform() < explore_rate_) uniform(k * per_link_, (k + 1) * per_link_);
    }
  } else {
    a = squashed_mean(t.output(), rows, act_dim_);
  }
  return a;
}

std::vector<LinkAction> SacAgent::act(const Observation& obs, bool explore) {
  last_action_ = raw_action(obs, explore);
  return mode_ == PayloadMode::semantic ? map_actions(last_action_, env_) : map_actions_bits(last_action_, env_);
}

void SacAgent::record(const Observation& s, double reward, const Observation& next, bool done) {
  if (cfg_.shared_links) {
    for (std::size_t k = 0; k < env_.q; ++k) {
      buffer_.add(s.link(k), last_action_.data() + k * per_link_, reward, next.link(k), done);
    }
  } else {
    buffer_.add(s.values, last_action_, reward, next.values, done);
  }
  ++env_steps_;
}

UpdateStats SacAgent::train_step() {
  const std::size_t threshold = std::max(cfg_.buffer_threshold, cfg_.batch_size);
  if (buffer_.size() < threshold || env_steps_ % cfg_.update_every != 0) return {};
  return update(buffer_.sample(cfg_.batch_size, rng_));
}

std::vector<double> SacAgent::compute_target(const Batch& batch, const std::vector<double>& rewards) {
  const std::size_t n = batch.size;
  Tape tp;
  policy_.forward(batch.next_states, n, tp);
  const SquashedGaussian g = SquashedGaussian::sample(tp.output(), n, act_dim_, rng_);
  const auto sa = concat_rows(batch.next_states, obs_dim_, g.action, act_dim_, n);
  const auto q1 = q1_t_.predict(sa, n);
  const auto q2 = q2_t_.predict(sa, n);
  return soft_bellman_target(rewards, batch.done, q1, q2, g.log_prob, entropy_weight(), cfg_.gamma);
}

UpdateStats SacAgent::update(const Batch& batch) {
  const std::size_t n = batch.size;
  UpdateStats st;
  st.updated = true;
  const auto r = normalize_rewards(batch.rewards, cfg_.reward_scale);
  const auto y = compute_target(batch, r);

  const auto sa = concat_rows(batch.states, obs_dim_, batch.actions, act_dim_, n);
  std::vector<double> g1(q1_.param_count(), 0.0);
  std::vector<double> g2(q2_.param_count(), 0.0);
  st.q_loss1 = critic_loss(q1_, sa, n, y, &g1);
  st.q_loss2 = critic_loss(q2_, sa, n, y, &g2);
  opt_q1_.apply(q1_.params(), g1);
  opt_q2_.apply(q2_.params(), g2);

  std::vector<double> z(n * act_dim_);
  for (double& v : z) v = rng_.normal();
  std::vector<double> gp(policy_.param_count(), 0.0);
  std::vector<double> logp;
  st.policy_loss = policy_loss(policy_, q1_, q2_, batch.states, n, z, entropy_weight(), &gp, &logp);
  opt_policy_.apply(policy_.params(), gp);

  double ge = 0.0;
  entropy_loss(log_eps_, logp, target_entropy_, &ge);
  log_eps_ -= cfg_.lr_entropy * ge;
  if (!std::isfinite(log_eps_)) throw NumericalError("entropy update: non-finite log epsilon");

  ++updates_;
  if (updates_ >= cfg_.iteration_threshold) {
    soft_update(q1_t_.params(), q1_.params(), cfg_.tau);
    soft_update(q2_t_.params(), q2_.params(), cfg_.tau);
  }
  st.epsilon = entropy_weight();
  return st;
}

nlohmann::json SacAgent::save() const {
  return nlohmann::json{{"agent_kind", kind()},
                        {"obs_dim", obs_dim_},
                        {"act_dim", act_dim_},
                        {"policy", policy_},
                        {"q1", q1_},
                        {"q2", q2_},
                        {"q1_target", q1_t_},
                        {"q2_target", q2_t_},
                        {"opt_policy", opt_policy_},
                        {"opt_q1", opt_q1_},
                        {"opt_q2", opt_q2_},
                        {"log_epsilon", log_eps_},
                        {"rng", rng_.state()},
                        {"exploration", explore_rate_},
                        {"env_steps", env_steps_},
                        {"updates", updates_}};
}

void SacAgent::load(const nlohmann::json& j) {
  if (j.at("agent_kind").get<std::string>() != kind()) {
    throw ConfigError("checkpoint: agent_kind is '" + j.at("agent_kind").get<std::string>() + "', expected '" +
                      kind() + "'");
  }
  if (j.at("obs_dim").get<std::size_t>() != obs_dim_) throw ConfigError("checkpoint: obs_dim does not match config");
  if (j.at("act_dim").get<std::size_t>() != act_dim_) throw ConfigError("checkpoint: act_dim does not match config");
  DenseNet p = j.at("policy").get<DenseNet>();
  if (p.layer_sizes() != policy_.layer_sizes()) throw ConfigError("checkpoint: policy layer_sizes do not match config");
  policy_ = std::move(p);
  q1_ = j.at("q1").get<DenseNet>();
  q2_ = j.at("q2").get<DenseNet>();
  q1_t_ = j.at("q1_target").get<DenseNet>();
  q2_t_ = j.at("q2_target").get<DenseNet>();
  if (q1_.layer_sizes() != q1_t_.layer_sizes() || q1_.in_dim() != obs_dim_ + act_dim_) {
    throw ConfigError("checkpoint: critic layer_sizes do not match config");
  }
  opt_policy_ = j.at("opt_policy").get<Adam>();
  opt_q1_ = j.at("opt_q1").get<Adam>();
  opt_q2_ = j.at("opt_q2").get<Adam>();
  log_eps_ = j.at("log_epsilon").get<double>();
  rng_.set_state(j.at("rng").get<std::string>());
  explore_rate_ = j.at("exploration").get<double>();
  env_steps_ = j.at("env_steps").get<std::size_t>();
  updates_ = j.at("updates").get<std::size_t>();
}

}  // namespace semshare
