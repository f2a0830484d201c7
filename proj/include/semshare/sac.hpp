#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "semshare/agent.hpp"
#include "semshare/nn.hpp"
#include "semshare/replay.hpp"

namespace semshare {

// Shared by every learning agent; the SAC fields double as DDPG/DDQN ones.
struct AgentConfig {
  std::vector<std::size_t> hidden{256, 256};
  double lr_q = 3e-4;
  double lr_policy = 3e-4;
  double lr_entropy = 3e-4;
  double gamma = 0.99;
  double tau = 0.01;
  double reward_scale = 10.0;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 1000000;
  std::size_t buffer_threshold = 0;     // 0: one batch
  std::size_t iteration_threshold = 1;  // soft updates start at this update count
  std::size_t update_every = 1;         // environment steps per gradient step
  std::size_t explore_steps = 1000;     // uniform actions up to this step count
  double target_entropy = std::numeric_limits<double>::quiet_NaN();  // NaN: -act_dim
  double initial_epsilon = 1.0;
  double final_layer_init = 3e-3;
  // SAC: one network applied to every link's observation slice, one replay
  // entry per link, instead of a joint policy over all links.
  bool shared_links = false;
  ExplorationSchedule exploration;
  // Baseline-only knobs.
  double ddpg_noise_std = 0.1;      // Gaussian action noise of the DDPG actor
  std::size_t hard_sync_every = 0;  // DDQN: copy target every n updates; 0 = soft update

  void validate() const;
};

// rs * (r - mean) / (std + 1e-6), population std.
std::vector<double> normalize_rewards(const std::vector<double>& rewards, double rs);

// Row-wise concatenation [s | a].
std::vector<double> concat_rows(const std::vector<double>& s, std::size_t s_dim, const std::vector<double>& a,
                                std::size_t a_dim, std::size_t batch);

// y = r + gamma (1 - done) (min(q1, q2) - epsilon logp_next)
std::vector<double> soft_bellman_target(const std::vector<double>& rewards, const std::vector<double>& done,
                                        const std::vector<double>& q1_next, const std::vector<double>& q2_next,
                                        const std::vector<double>& logp_next, double epsilon, double gamma);

// mean((Q(s, a) - y)^2); adds d loss / d params into grad when non-null.
double critic_loss(const DenseNet& q, const std::vector<double>& state_action, std::size_t batch,
                   const std::vector<double>& target, std::vector<double>* grad);

// mean(epsilon logpi(a|s) - min(Q1, Q2)(s, a)) with a = tanh(mu + sigma z).
// Adds d loss / d policy params into grad; logp receives logpi per sample.
double policy_loss(const DenseNet& policy, const DenseNet& q1, const DenseNet& q2, const std::vector<double>& states,
                   std::size_t batch, const std::vector<double>& z, double epsilon, std::vector<double>* grad,
                   std::vector<double>* logp = nullptr);

// -log_eps * mean(target_entropy + logp); grad is d loss / d log_eps.
double entropy_loss(double log_eps, const std::vector<double>& logp, double target_entropy, double* grad);

// target <- (1 - tau) target + tau online
void soft_update(std::vector<double>& target, const std::vector<double>& online, double tau);

class SacAgent : public Agent {
 public:
  // per_link_dims = 3 for the semantic action (band, power, u), 2 for bits.
  SacAgent(const EnvConfig& env, const AgentConfig& cfg, PayloadMode mode, std::uint64_t seed);

  std::string kind() const override { return mode_ == PayloadMode::semantic ? "sac_sc" : "sac_bits"; }
  PayloadMode mode() const override { return mode_; }

  std::vector<LinkAction> act(const Observation& obs, bool explore) override;
  void record(const Observation& s, double reward, const Observation& next, bool done) override;
  UpdateStats train_step() override;
  void begin_episode(std::size_t episode, std::size_t episode_max) override;
  double exploration() const override { return explore_rate_; }
  double entropy_weight() const override;
  std::size_t buffer_size() const override { return buffer_.size(); }

  nlohmann::json save() const override;
  void load(const nlohmann::json& j) override;
  const ReplayBuffer* replay() const override { return &buffer_; }
  ReplayBuffer* replay() override { return &buffer_; }

  // Raw action in (-1, 1)^act_dim: uniform during warm-up and, per link, with
  // the exploration probability; otherwise sampled (explore) or tanh(mean).
  std::vector<double> raw_action(const Observation& obs, bool explore);
  UpdateStats update(const Batch& batch);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }
  double log_epsilon() const { return log_eps_; }
  void set_log_epsilon(double v) { log_eps_ = v; }
  double target_entropy() const { return target_entropy_; }
  const AgentConfig& config() const { return cfg_; }
  DenseNet& policy() { return policy_; }
  DenseNet& q1() { return q1_; }
  DenseNet& q2() { return q2_; }
  DenseNet& q1_target() { return q1_t_; }
  DenseNet& q2_target() { return q2_t_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  Rng& rng() { return rng_; }
  std::size_t updates() const { return updates_; }
  std::size_t env_steps() const { return env_steps_; }

  // Bellman targets for a batch, with normalized rewards.
  std::vector<double> compute_target(const Batch& batch, const std::vector<double>& rewards);

 private:
  EnvConfig env_;
  AgentConfig cfg_;
  PayloadMode mode_;
  std::size_t per_link_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  double target_entropy_;
  DenseNet policy_;
  DenseNet q1_;
  DenseNet q2_;
  DenseNet q1_t_;
  DenseNet q2_t_;
  Adam opt_policy_;
  Adam opt_q1_;
  Adam opt_q2_;
  double log_eps_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::vector<double> last_action_;
  double explore_rate_ = 1.0;
  std::size_t env_steps_ = 0;
  std::size_t updates_ = 0;
};

}  // namespace semshare
