#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semshare/baselines.hpp"
#include "semshare/errors.hpp"
#include "semshare/harness.hpp"

using namespace semshare;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("semshare_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& path) {
  const std::string s = slurp(path);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

RunConfig tiny(const std::string& dir) {
  RunConfig c;
  c.output_dir = dir;
  c.episode_max = 2;
  c.episode_test = 3;
  c.agent.hidden = {8, 8};
  c.agent.batch_size = 8;
  c.agent.explore_steps = 50;
  c.agent.buffer_capacity = 10000;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SEMSHARE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config: defaults, round trip, unknown keys") {
  const RunConfig d = parse_run_config(nlohmann::json::object());
  CHECK(d.env.q == 4);
  CHECK(d.env.w == 4);
  CHECK(d.agent.hidden == std::vector<std::size_t>{256, 256});
  CHECK(d.agent_kind == "sac_sc");
  const RunConfig back = parse_run_config(to_json(d));
  CHECK(to_json(back) == to_json(d));

  try {
    parse_run_config(nlohmann::json::parse(R"({"agent": {"hiden": [3]}})"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("agent.hiden") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config(nlohmann::json::parse(R"({"agent_kind": "nope"})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(nlohmann::json::parse(R"({"env": {"varpi": "x"}})")), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("training smoke run writes the log and the checkpoint") {
  const auto dir = fresh_dir("smoke");
  const auto r = run_training(tiny(dir));
  CHECK(r.log.size() == 2);
  CHECK(count_lines(r.log_path) == 3);
  const auto ck = read_json_file(r.checkpoint_path);
  CHECK(ck.at("agent_kind") == "sac_sc");
  CHECK(ck.at("next_episode") == 2);
  for (const auto& row : r.log) {
    CHECK(std::isfinite(row.mean_reward));
    CHECK(row.srs >= 0.0);
    CHECK(row.srs <= 1.0);
  }
}

TEST_CASE("resume continues the run exactly") {
  RunConfig c = tiny(fresh_dir("resume_full"));
  c.episode_max = 4;
  const auto full = run_training(c);

  // Interrupted run: stop after two episodes with a checkpoint on disk.
  RunConfig c2 = c;
  c2.output_dir = fresh_dir("resume_part");
  const std::string log_path = (fs::path(c2.output_dir) / "training_log.csv").string();
  const std::string ck_path = (fs::path(c2.output_dir) / "mid.json").string();
  {
    const EnvConfig ec = c2.env_for(c2.agent_kind);
    Environment env(ec, c2.seed, make_similarity_model(c2));
    auto agent = make_agent(c2.agent_kind, ec, c2.agent, c2.seed);
    std::ofstream log(log_path);
    write_training_log_header(log);
    TrainOptions opts;
    opts.episode_max = c2.episode_max;
    struct Stop {};
    opts.after_episode = [&](std::size_t e) {
      if (e == 1) {
        write_checkpoint(ck_path, make_checkpoint(c2, *agent, env, 2), *agent);
        throw Stop{};
      }
    };
    CHECK_THROWS_AS(train_agent(env, *agent, opts, &log, agent->kind()), Stop);
  }
  const auto resumed = run_training(c2, ck_path);
  CHECK(resumed.log.size() == 2);
  CHECK(resumed.log.front().episode == 2);
  CHECK(slurp(resumed.log_path) == slurp(full.log_path));
  CHECK(slurp(resumed.checkpoint_path) == slurp(full.checkpoint_path));
  CHECK(slurp(replay_snapshot_path(resumed.checkpoint_path)) == slurp(replay_snapshot_path(full.checkpoint_path)));

  fs::remove(replay_snapshot_path(ck_path));
  CHECK_THROWS_AS(run_training(c2, ck_path), IoError);
}

TEST_CASE("checkpoint mismatch names the field") {
  const auto dir = fresh_dir("mismatch");
  RunConfig c = tiny(dir);
  c.episode_max = 1;
  const auto r = run_training(c);
  RunConfig other = c;
  other.agent.hidden = {16, 8};
  try {
    run_testing(other, r.checkpoint_path, false);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("agent.hidden") != std::string::npos);
  }
  other = c;
  other.agent_kind = "ddpg_sc";
  CHECK_THROWS_AS(run_testing(other, r.checkpoint_path, false), ConfigError);
  CHECK_THROWS_AS(run_testing(c, dir + "/missing.json", false), IoError);
  CHECK_THROWS_AS(run_testing(c, "", false), UsageError);

  // Testing the trained agent runs the exploit loop.
  const auto s = run_testing(c, r.checkpoint_path, false);
  CHECK(s.episodes == 3);
}

TEST_CASE("testing a random agent without a checkpoint") {
  const auto dir = fresh_dir("random_test");
  RunConfig c = tiny(dir);
  c.agent_kind = "random_sc";
  c.step_metrics = true;
  const auto s = run_testing(c, "");
  CHECK(s.episodes == 3);
  CHECK(s.mean_srs >= 0.0);
  CHECK(s.mean_srs <= 1.0);
  for (const auto& e : s.detail) {
    CHECK(e.srs == doctest::Approx(static_cast<double>(e.successes) / 4.0));
    CHECK(e.demand_trace.size() == 100);
    for (std::size_t st = 1; st < e.demand_trace.size(); ++st) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(e.demand_trace[st][k] <= e.demand_trace[st - 1][k]);
    }
    if (e.successes > 0) {
      CHECK(e.response_time > 0.0);
      CHECK(e.response_time <= c.env.time_budget);
    }
  }
  CHECK(count_lines(dir + "/test_metrics.csv") == 4);
  CHECK(count_lines(dir + "/demand_trace.csv") == 1 + 3 * 100 * 4);
  CHECK(count_lines(dir + "/step_metrics.csv") == 1 + 3 * 100 * 4);
  const auto j = read_json_file(dir + "/test_summary.json");
  CHECK(j.at("mean_srs").get<double>() == s.mean_srs);
}

TEST_CASE("summary statistics") {
  std::vector<TestEpisode> eps(2);
  eps[0].hsse_v2i = 1.0;
  eps[0].srs = 0.5;
  eps[0].successes = 2;
  eps[0].response_time = 0.04;
  eps[1].hsse_v2i = 3.0;
  eps[1].srs = 0.0;
  const auto s = summarize("x", eps);
  CHECK(s.mean_hsse == 2.0);
  CHECK(s.mean_srs == 0.25);
  CHECK(s.hsse_ci95 == doctest::Approx(1.96 * std::sqrt(2.0) / std::sqrt(2.0)));
  CHECK(s.mean_response_time == 0.04);
}

TEST_CASE("sweeps: shape, errors, singleton equals testing") {
  const auto dir = fresh_dir("sweep");
  RunConfig c = tiny(dir);
  c.agent_kind = "random_sc";
  c.episode_test = 2;
  c.sweep.agents = {"random_sc", "random_bits"};
  c.sweep.seeds = {5, 6};
  const auto rows = run_sweep(c, "v2i_power_dbm", {5.0, 14.0, 23.0});
  CHECK(rows.size() == 12);
  CHECK(count_lines(dir + "/sweep_v2i_power_dbm.csv") == 13);
  for (const auto& r : rows) CHECK(r.parameter == "v2i_power_dbm");
  try {
    run_sweep(c, "bandwidth", {1.0});
    FAIL("expected a UsageError");
  } catch (const UsageError& e) {
    const std::string m = e.what();
    for (const auto& p : sweep_parameters()) CHECK(m.find(p) != std::string::npos);
  }
  CHECK_THROWS_AS(run_sweep(c, "n_vehicles", {7.5}), ConfigError);
  CHECK_THROWS_AS(run_sweep(c, "u_bits", {}), UsageError);

  RunConfig one = c;
  one.sweep.agents = {};
  one.sweep.seeds = {};
  const auto single = run_sweep(one, "demand_multiplier", {c.env.demand_multiplier});
  const auto direct = run_testing(one, "", false);
  REQUIRE(single.size() == 1);
  CHECK(single[0].summary.mean_hsse == direct.mean_hsse);
  CHECK(single[0].summary.mean_srs == direct.mean_srs);
  CHECK(single[0].summary.mean_reward == direct.mean_reward);
}

TEST_CASE("sweep trains a learning agent once and reuses it") {
  const auto dir = fresh_dir("sweep_train");
  RunConfig c = tiny(dir);
  c.episode_max = 1;
  c.episode_test = 1;
  const auto rows = run_sweep(c, "u_bits", {10.0, 40.0});
  CHECK(rows.size() == 2);
  CHECK(fs::exists(dir + "/train_sac_sc/checkpoint.json"));
  // The semantic agent never reads u_bits.
  CHECK(rows[0].summary.mean_hsse == rows[1].summary.mean_hsse);
}

TEST_CASE("command line exit codes") {
  const auto dir = fresh_dir("cli");
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  {
    std::ofstream(dir + "/bad.json") << R"({"episode_max": 3, "bogus": 1})";
    std::ofstream(dir + "/good.json") << R"({"agent_kind": "random_bits", "episode_test": 1})";
  }
  CHECK(run_cli("validate-config -c " + dir + "/bad.json") == 2);
  CHECK(run_cli("validate-config -c " + dir + "/good.json") == 0);
  CHECK(run_cli("validate-config -c " + dir + "/absent.json") == 4);
  CHECK(run_cli("test -c " + dir + "/good.json -o " + dir + "/t") == 0);
  CHECK(fs::exists(dir + "/t/test_summary.json"));
  CHECK(run_cli("test -c " + dir + "/good.json -o " + dir + "/t -a sac_sc") == 1);
  CHECK(run_cli("test -c " + dir + "/good.json -o " + dir + "/t -a sac_bits --checkpoint " + dir + "/nothing.json") ==
        4);
  CHECK(run_cli("sweep -c " + dir + "/good.json -o " + dir + "/s -p colour --values 1") == 1);
  CHECK(run_cli("sweep -c " + dir + "/good.json -o " + dir + "/s -p u_bits --values 8,x") == 1);
  CHECK(run_cli("sweep -c " + dir + "/good.json -o " + dir + "/s -p u_bits --values 8,16") == 0);
  CHECK(run_cli("dump-similarity-table -o " + dir + "/table.csv") == 0);
  CHECK(count_lines(dir + "/table.csv") > 36);
}

}
