#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "semshare/agent.hpp"
#include "semshare/nn.hpp"
#include "semshare/replay.hpp"
#include "semshare/sac.hpp"

namespace semshare {

// Joint (band, power) choice of one link, indexed band * powers + power.
struct DiscreteActionSpec {
  std::size_t bands = 4;
  std::size_t powers = 4;

  std::size_t size() const { return bands * powers; }
  std::pair<std::size_t, std::size_t> decode(std::size_t index) const;
  std::size_t encode(std::size_t band, std::size_t power) const;
};

// Uniform draw from the joint space for each of q links.
std::vector<std::pair<std::size_t, std::size_t>> random_act(const DiscreteActionSpec& spec, std::size_t q, Rng& rng);

// random_bits: uniform (band, power). random_sc: uniform (band, power, u).
class RandomAgent : public Agent {
 public:
  RandomAgent(const EnvConfig& env, PayloadMode mode, std::uint64_t seed);

  std::string kind() const override { return mode_ == PayloadMode::semantic ? "random_sc" : "random_bits"; }
  PayloadMode mode() const override { return mode_; }
  std::vector<LinkAction> act(const Observation& obs, bool explore) override;
  bool learns() const override { return false; }
  nlohmann::json save() const override;
  void load(const nlohmann::json& j) override;

 private:
  EnvConfig env_;
  PayloadMode mode_;
  DiscreteActionSpec spec_;
  Rng rng_;
};

// Double-Q target with argmax from the online net, value from the target net:
// y = r + gamma (1 - done) Q_target(s', argmax_a Q_online(s', a)).
std::vector<double> ddqn_target(const DenseNet& online, const DenseNet& target, const std::vector<double>& next_states,
                                const std::vector<double>& rewards, const std::vector<double>& done, std::size_t batch,
                                double gamma);

// mean((Q(s)[a] - y)^2) with a stored as integral doubles.
double ddqn_loss(const DenseNet& q, const std::vector<double>& states, const std::vector<double>& actions,
                 std::size_t batch, const std::vector<double>& target, std::vector<double>* grad);

// One network shared by all links, acting on each link's observation block.
class DdqnAgent : public Agent {
 public:
  DdqnAgent(const EnvConfig& env, const AgentConfig& cfg, std::uint64_t seed);

  std::string kind() const override { return "ddqn_bits"; }
  PayloadMode mode() const override { return PayloadMode::bits; }
  std::vector<LinkAction> act(const Observation& obs, bool explore) override;
  void record(const Observation& s, double reward, const Observation& next, bool done) override;
  UpdateStats train_step() override;
  void begin_episode(std::size_t episode, std::size_t episode_max) override;
  double exploration() const override { return explore_rate_; }
  double entropy_weight() const override { return explore_rate_; }
  std::size_t buffer_size() const override { return buffer_.size(); }
  nlohmann::json save() const override;
  void load(const nlohmann::json& j) override;
  const ReplayBuffer* replay() const override { return &buffer_; }
  ReplayBuffer* replay() override { return &buffer_; }

  UpdateStats update(const Batch& batch);
  DenseNet& online() { return online_; }
  DenseNet& target() { return target_; }
  const DiscreteActionSpec& spec() const { return spec_; }

 private:
  EnvConfig env_;
  AgentConfig cfg_;
  DiscreteActionSpec spec_;
  std::size_t per_link_;
  DenseNet online_;
  DenseNet target_;
  Adam opt_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::vector<std::size_t> last_action_;
  double explore_rate_ = 1.0;
  std::size_t env_steps_ = 0;
  std::size_t updates_ = 0;
};

// y = r + gamma (1 - done) q_next
std::vector<double> ddpg_critic_target(const std::vector<double>& rewards, const std::vector<double>& done,
                                       const std::vector<double>& q_next, double gamma);

// tanh of the actor output.
std::vector<double> ddpg_actions(const DenseNet& actor, const std::vector<double>& states, std::size_t batch);

// -mean Q(s, tanh(actor(s))); grad w.r.t. actor params.
double ddpg_actor_loss(const DenseNet& actor, const DenseNet& critic, const std::vector<double>& states,
                       std::size_t batch, std::vector<double>* grad);

// Deterministic actor over the semantic action (band, power, u) per link.
class DdpgAgent : public Agent {
 public:
  DdpgAgent(const EnvConfig& env, const AgentConfig& cfg, std::uint64_t seed);

  std::string kind() const override { return "ddpg_sc"; }
  PayloadMode mode() const override { return PayloadMode::semantic; }
  std::vector<LinkAction> act(const Observation& obs, bool explore) override;
  void record(const Observation& s, double reward, const Observation& next, bool done) override;
  UpdateStats train_step() override;
  void begin_episode(std::size_t episode, std::size_t episode_max) override;
  double exploration() const override { return explore_rate_; }
  std::size_t buffer_size() const override { return buffer_.size(); }
  nlohmann::json save() const override;
  void load(const nlohmann::json& j) override;
  const ReplayBuffer* replay() const override { return &buffer_; }
  ReplayBuffer* replay() override { return &buffer_; }

  std::vector<double> raw_action(const Observation& obs, bool explore);
  UpdateStats update(const Batch& batch);
  DenseNet& actor() { return actor_; }
  DenseNet& critic() { return critic_; }

 private:
  EnvConfig env_;
  AgentConfig cfg_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  DenseNet actor_;
  DenseNet critic_;
  DenseNet actor_t_;
  DenseNet critic_t_;
  Adam opt_actor_;
  Adam opt_critic_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::vector<double> last_action_;
  double explore_rate_ = 1.0;
  std::size_t env_steps_ = 0;
  std::size_t updates_ = 0;
};

// Agent kinds: sac_sc, sac_bits, ddpg_sc, ddqn_bits, random_bits, random_sc.
const std::vector<std::string>& agent_kinds();
PayloadMode agent_mode(const std::string& kind);
std::unique_ptr<Agent> make_agent(const std::string& kind, const EnvConfig& env, const AgentConfig& cfg,
                                  std::uint64_t seed);

}  // namespace semshare
