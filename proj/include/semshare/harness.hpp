#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semshare/agent.hpp"
#include "semshare/config.hpp"

namespace semshare {

std::shared_ptr<const SimilarityModel> make_similarity_model(const RunConfig& cfg);

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  std::vector<EpisodeLog> log;
  nlohmann::json checkpoint;
};

// Trains cfg.agent_kind for cfg.episode_max episodes. Writes
// <output_dir>/training_log.csv and <output_dir>/checkpoint.json; with
// resume_from, continues the run stored in that checkpoint.
TrainResult run_training(const RunConfig& cfg, const std::string& resume_from = "");

nlohmann::json make_checkpoint(const RunConfig& cfg, const Agent& agent, const Environment& env,
                               std::size_t next_episode);
// Writes the JSON checkpoint and, for agents with replay memory, the binary
// snapshot at replay_snapshot_path(path).
void write_checkpoint(const std::string& path, const nlohmann::json& checkpoint, const Agent& agent);
std::string replay_snapshot_path(const std::string& checkpoint_path);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

struct TestSummary {
  std::string agent_kind;
  std::size_t episodes = 0;
  double mean_hsse = 0.0;
  double hsse_ci95 = 0.0;
  double mean_srs = 0.0;
  double srs_ci95 = 0.0;
  double mean_response_time = 0.0;  // over episodes with at least one success
  double mean_reward = 0.0;
  std::vector<TestEpisode> detail;
};

TestSummary summarize(const std::string& agent_kind, const std::vector<TestEpisode>& eps);

// Builds the agent for testing: from the checkpoint when given, otherwise a
// fresh instance (only meaningful for the random agents).
std::unique_ptr<Agent> restore_agent(const RunConfig& cfg, const nlohmann::json* checkpoint);

// Exploit-mode evaluation over cfg.episode_test episodes with cfg.test_seed.
// Writes test_metrics.csv and demand_trace.csv (and step_metrics.csv when
// cfg.step_metrics) under cfg.output_dir when write_files is set.
TestSummary run_testing(const RunConfig& cfg, const std::string& checkpoint_path, bool write_files = true);
TestSummary evaluate(const RunConfig& cfg, Agent& agent, std::uint64_t seed, std::ostream* step_metrics = nullptr);

const std::vector<std::string>& sweep_parameters();
// Throws UsageError listing the supported names.
void apply_sweep_value(RunConfig& cfg, const std::string& parameter, double value);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string agent_kind;
  std::uint64_t seed = 0;
  TestSummary summary;
};

// One row per (value, agent, seed) in <output_dir>/sweep_<parameter>.csv.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values);
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepRow& r);

}  // namespace semshare
