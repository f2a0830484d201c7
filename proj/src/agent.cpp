#include "semshare/agent.hpp"

#include <algorithm>
#include <ostream>

#include "semshare/errors.hpp"

namespace semshare {

double ExplorationSchedule::at(std::size_t episode, std::size_t episode_max) const {
  const double horizon = fraction * static_cast<double>(episode_max);
  if (!(horizon > 0)) return floor;
  const double t = std::min(1.0, static_cast<double>(episode) / horizon);
  return start + (floor - start) * t;
}

void ExplorationSchedule::validate() const {
  if (!(start >= 0 && start <= 1 && floor >= 0 && floor <= 1)) {
    throw ConfigError("exploration: start and floor must lie in [0, 1]");
  }
  if (!(fraction >= 0 && fraction <= 1)) throw ConfigError("exploration: fraction must lie in [0, 1]");
}

void write_training_log_header(std::ostream& os) {
  os << "episode,agent_kind,mean_reward,r1_mean,r2_mean,q_loss1,q_loss2,policy_loss,epsilon,buffer_size,"
        "exploration,srs,hsse_v2i\n";
}

void write_training_log_row(std::ostream& os, const std::string& agent_kind, const EpisodeLog& r) {
  const auto old = os.precision(17);
  os << r.episode << ',' << agent_kind << ',' << r.mean_reward << ',' << r.r1_mean << ',' << r.r2_mean << ','
     << r.q_loss1 << ',' << r.q_loss2 << ',' << r.policy_loss << ',' << r.epsilon << ',' << r.buffer_size << ','
     << r.exploration << ',' << r.srs << ',' << r.hsse_v2i << '\n';
  os.precision(old);
}

std::vector<EpisodeLog> train_agent(Environment& env, Agent& agent, const TrainOptions& opts, std::ostream* log,
                                    const std::string& agent_kind) {
  std::vector<EpisodeLog> rows;
  const std::string kind = agent_kind.empty() ? agent.kind() : agent_kind;
  const double e_max = static_cast<double>(std::max<std::size_t>(opts.episode_max, 1));
  for (std::size_t e = opts.start_episode; e < opts.episode_max; ++e) {
    agent.begin_episode(e, opts.episode_max);
    Observation obs = env.reset(e, static_cast<double>(e) / e_max, agent.exploration());
    EpisodeLog row;
    row.episode = e;
    std::size_t n_updates = 0;
    while (!env.done()) {
      const auto actions = agent.act(obs, true);
      StepResult res = env.step(actions);
      agent.record(obs, res.reward, res.observation, res.done);
      const UpdateStats st = agent.train_step();
      if (st.updated) {
        ++n_updates;
        row.q_loss1 += st.q_loss1;
        row.q_loss2 += st.q_loss2;
        row.policy_loss += st.policy_loss;
      }
      obs = std::move(res.observation);
    }
    const EpisodeStats& s = env.episode_stats();
    const double steps = static_cast<double>(std::max<std::size_t>(s.steps, 1));
    row.mean_reward = s.reward_sum / steps;
    row.r1_mean = s.r1_sum / steps;
    row.r2_mean = s.r2_sum / steps;
    if (n_updates > 0) {
      row.q_loss1 /= static_cast<double>(n_updates);
      row.q_loss2 /= static_cast<double>(n_updates);
      row.policy_loss /= static_cast<double>(n_updates);
    }
    row.epsilon = agent.entropy_weight();
    row.buffer_size = agent.buffer_size();
    row.exploration = agent.exploration();
    row.srs = static_cast<double>(std::count(s.success.begin(), s.success.end(), true)) /
              static_cast<double>(std::max<std::size_t>(s.success.size(), 1));
    row.hsse_v2i = s.hsse_v2i_sum / steps;
    if (log) write_training_log_row(*log, kind, row);
    rows.push_back(row);
    if (opts.after_episode) opts.after_episode(e);
  }
  return rows;
}

std::vector<TestEpisode> test_agent(Environment& env, Agent& agent, std::size_t episodes,
                                    std::ostream* step_metrics) {
  std::vector<TestEpisode> out;
  const double dt = env.config().step_dt;
  for (std::size_t e = 0; e < episodes; ++e) {
    Observation obs = env.reset(e, 1.0, agent.exploration());
    TestEpisode te;
    te.episode = e;
    while (!env.done()) {
      StepResult res = env.step(agent.act(obs, false));
      if (step_metrics) env.write_metrics(*step_metrics, res);
      std::vector<double> trace;
      trace.reserve(res.links.size());
      for (const auto& l : res.links) trace.push_back(l.remaining);
      te.demand_trace.push_back(std::move(trace));
      obs = std::move(res.observation);
    }
    const EpisodeStats& s = env.episode_stats();
    const double steps = static_cast<double>(std::max<std::size_t>(s.steps, 1));
    te.hsse_v2i = s.hsse_v2i_sum / steps;
    te.mean_reward = s.reward_sum / steps;
    te.links = s.success.size();
    double t_sum = 0.0;
    for (std::size_t k = 0; k < s.success.size(); ++k) {
      if (s.success[k]) {
        ++te.successes;
        t_sum += static_cast<double>(s.completion_step[k]) * dt;
      }
    }
    te.srs = te.links ? static_cast<double>(te.successes) / static_cast<double>(te.links) : 0.0;
    te.response_time = te.successes ? t_sum / static_cast<double>(te.successes) : 0.0;
    out.push_back(std::move(te));
  }
  return out;
}

}  // namespace semshare
