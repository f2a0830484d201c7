#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semshare/environment.hpp"
#include "semshare/replay.hpp"

namespace semshare {

// Probability of replacing a link's action with a uniform one. Decays
// linearly from `start` to `floor` over the first `fraction` of episodes.
struct ExplorationSchedule {
  double start = 1.0;
  double floor = 0.02;
  double fraction = 0.8;

  double at(std::size_t episode, std::size_t episode_max) const;
  void validate() const;
};

struct UpdateStats {
  bool updated = false;
  double q_loss1 = 0.0;
  double q_loss2 = 0.0;
  double policy_loss = 0.0;
  double epsilon = 0.0;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string kind() const = 0;
  virtual PayloadMode mode() const = 0;

  // explore = training behaviour; otherwise the deterministic policy.
  // The encoded action is remembered for the following record().
  virtual std::vector<LinkAction> act(const Observation& obs, bool explore) = 0;
  virtual void record(const Observation& /*s*/, double /*reward*/, const Observation& /*next*/, bool /*done*/) {}
  virtual UpdateStats train_step() { return {}; }

  virtual void begin_episode(std::size_t /*episode*/, std::size_t /*episode_max*/) {}
  virtual double exploration() const { return 0.0; }
  virtual double entropy_weight() const { return 0.0; }
  virtual std::size_t buffer_size() const { return 0; }
  virtual bool learns() const { return true; }

  virtual nlohmann::json save() const = 0;
  virtual void load(const nlohmann::json& j) = 0;

  // Replay memory, kept out of the JSON checkpoint for size.
  virtual const ReplayBuffer* replay() const { return nullptr; }
  virtual ReplayBuffer* replay() { return nullptr; }
};

struct EpisodeLog {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double r1_mean = 0.0;
  double r2_mean = 0.0;
  double q_loss1 = 0.0;
  double q_loss2 = 0.0;
  double policy_loss = 0.0;
  double epsilon = 0.0;
  std::size_t buffer_size = 0;
  double exploration = 0.0;
  double srs = 0.0;
  double hsse_v2i = 0.0;  // mean per-step sum over V2I links
};

void write_training_log_header(std::ostream& os);
void write_training_log_row(std::ostream& os, const std::string& agent_kind, const EpisodeLog& row);

struct TrainOptions {
  std::size_t episode_max = 1000;
  std::size_t start_episode = 0;
  // Called after each episode with the index of the finished episode.
  std::function<void(std::size_t)> after_episode;
};

// The training loop: reset, act, step, record, update, per episode.
std::vector<EpisodeLog> train_agent(Environment& env, Agent& agent, const TrainOptions& opts,
                                    std::ostream* log = nullptr, const std::string& agent_kind = "");

struct TestEpisode {
  std::size_t episode = 0;
  double hsse_v2i = 0.0;  // mean per-step sum over V2I links
  double mean_reward = 0.0;
  double srs = 0.0;       // fraction of links that delivered in time
  double response_time = 0.0;  // mean completion time of successful links, seconds; 0 if none
  std::size_t successes = 0;
  std::size_t links = 0;
  std::vector<std::vector<double>> demand_trace;  // [step][link], remaining after the step
};

// Exploit-mode rollouts over episodes [0, n).
std::vector<TestEpisode> test_agent(Environment& env, Agent& agent, std::size_t episodes,
                                    std::ostream* step_metrics = nullptr);

}  // namespace semshare
