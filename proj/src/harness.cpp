#include "semshare/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semshare/baselines.hpp"
#include "semshare/errors.hpp"

namespace semshare {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFormat = "semshare-checkpoint";
constexpr int kCheckpointVersion = 1;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot write '" + path + "'");
  return os;
}

double ci95(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace

std::shared_ptr<const SimilarityModel> make_similarity_model(const RunConfig& cfg) {
  if (!cfg.similarity_table.empty()) {
    return std::make_shared<const SimilarityModel>(load_similarity_csv(cfg.similarity_table));
  }
  return std::make_shared<const SimilarityModel>(default_similarity_model(cfg.surrogate, cfg.surrogate_grid));
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump() << '\n';
  if (!os) throw IoError("failed writing '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

nlohmann::json make_checkpoint(const RunConfig& cfg, const Agent& agent, const Environment& env,
                               std::size_t next_episode) {
  // The output location is left out so that runs in different directories
  // produce identical checkpoints.
  nlohmann::json config = to_json(cfg);
  config.erase("output_dir");
  return nlohmann::json{{"format", kCheckpointFormat}, {"version", kCheckpointVersion},
                        {"agent_kind", agent.kind()},  {"next_episode", next_episode},
                        {"config", config},           {"agent", agent.save()},
                        {"env", env.save_state()}};
}

std::string replay_snapshot_path(const std::string& checkpoint_path) { return checkpoint_path + ".replay"; }

void write_checkpoint(const std::string& path, const nlohmann::json& checkpoint, const Agent& agent) {
  write_json_file(path, checkpoint);
  if (const ReplayBuffer* rb = agent.replay()) {
    auto os = open_out(replay_snapshot_path(path), std::ios::out | std::ios::binary);
    rb->write(os);
  }
}

namespace {

void load_replay(const std::string& checkpoint_path, Agent& agent) {
  ReplayBuffer* rb = agent.replay();
  if (!rb) return;
  const std::string p = replay_snapshot_path(checkpoint_path);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open replay snapshot '" + p + "' (needed to resume training)");
  try {
    rb->read(in);
  } catch (const IoError& e) {
    throw IoError(p + ": " + e.what());
  }
}

void check_checkpoint(const nlohmann::json& ck, const RunConfig& cfg) {
  if (!ck.is_object() || ck.value("format", "") != kCheckpointFormat) {
    throw ConfigError("checkpoint: missing or wrong 'format' field");
  }
  if (ck.at("version").get<int>() != kCheckpointVersion) throw ConfigError("checkpoint: unsupported 'version'");
  const auto kind = ck.at("agent_kind").get<std::string>();
  if (kind != cfg.agent_kind) {
    throw ConfigError("checkpoint: field 'agent_kind' is '" + kind + "' but the config selects '" + cfg.agent_kind +
                      "'");
  }
  const auto& c = ck.at("config");
  const auto sc = c.at("scenario");
  if (sc.at("q").get<std::size_t>() != cfg.env.q) throw ConfigError("checkpoint: field 'scenario.q' differs from config");
  if (sc.at("w").get<std::size_t>() != cfg.env.w) throw ConfigError("checkpoint: field 'scenario.w' differs from config");
  if (c.at("agent").at("hidden").get<std::vector<std::size_t>>() != cfg.agent.hidden) {
    throw ConfigError("checkpoint: field 'agent.hidden' differs from config");
  }
}

}  // namespace

TrainResult run_training(const RunConfig& cfg, const std::string& resume_from) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const EnvConfig env_cfg = cfg.env_for(cfg.agent_kind);
  Environment env(env_cfg, cfg.seed, make_similarity_model(cfg));
  auto agent = make_agent(cfg.agent_kind, env_cfg, cfg.agent, cfg.seed);

  TrainOptions opts;
  opts.episode_max = cfg.episode_max;
  if (!resume_from.empty()) {
    const auto ck = read_json_file(resume_from);
    check_checkpoint(ck, cfg);
    agent->load(ck.at("agent"));
    load_replay(resume_from, *agent);
    env.load_state(ck.at("env"));
    opts.start_episode = ck.at("next_episode").get<std::size_t>();
  }

  TrainResult out;
  out.log_path = (fs::path(cfg.output_dir) / "training_log.csv").string();
  out.checkpoint_path = (fs::path(cfg.output_dir) / "checkpoint.json").string();
  const bool append = !resume_from.empty() && fs::exists(out.log_path);
  auto log = open_out(out.log_path, append ? std::ios::app : std::ios::out);
  if (!append) write_training_log_header(log);

  if (cfg.checkpoint_every > 0) {
    opts.after_episode = [&](std::size_t e) {
      if ((e + 1) % cfg.checkpoint_every == 0 && e + 1 < cfg.episode_max) {
        write_checkpoint(out.checkpoint_path, make_checkpoint(cfg, *agent, env, e + 1), *agent);
        log.flush();
      }
    };
  }
  try {
    out.log = train_agent(env, *agent, opts, &log, agent->kind());
  } catch (const NumericalError& e) {
    log.flush();
    throw NumericalError(std::string(e.what()) + " (during training, after " +
                         std::to_string(opts.start_episode + out.log.size()) + " logged episodes)");
  }
  out.checkpoint = make_checkpoint(cfg, *agent, env, cfg.episode_max);
  write_checkpoint(out.checkpoint_path, out.checkpoint, *agent);
  return out;
}

TestSummary summarize(const std::string& agent_kind, const std::vector<TestEpisode>& eps) {
  TestSummary s;
  s.agent_kind = agent_kind;
  s.episodes = eps.size();
  s.detail = eps;
  if (eps.empty()) return s;
  std::vector<double> h;
  std::vector<double> r;
  double rt = 0.0;
  std::size_t rt_n = 0;
  for (const auto& e : eps) {
    h.push_back(e.hsse_v2i);
    r.push_back(e.srs);
    s.mean_reward += e.mean_reward;
    if (e.successes > 0) {
      rt += e.response_time;
      ++rt_n;
    }
  }
  const double n = static_cast<double>(eps.size());
  for (double x : h) s.mean_hsse += x / n;
  for (double x : r) s.mean_srs += x / n;
  s.mean_reward /= n;
  s.hsse_ci95 = ci95(h, s.mean_hsse);
  s.srs_ci95 = ci95(r, s.mean_srs);
  s.mean_response_time = rt_n ? rt / static_cast<double>(rt_n) : 0.0;
  return s;
}

std::unique_ptr<Agent> restore_agent(const RunConfig& cfg, const nlohmann::json* checkpoint) {
  const EnvConfig env_cfg = cfg.env_for(cfg.agent_kind);
  auto agent = make_agent(cfg.agent_kind, env_cfg, cfg.agent, cfg.seed);
  if (checkpoint) {
    check_checkpoint(*checkpoint, cfg);
    agent->load(checkpoint->at("agent"));
  } else if (agent->learns()) {
    throw UsageError("agent '" + cfg.agent_kind + "' needs a checkpoint for testing");
  }
  return agent;
}

TestSummary evaluate(const RunConfig& cfg, Agent& agent, std::uint64_t seed, std::ostream* step_metrics) {
  Environment env(cfg.env_for(agent.kind()), seed, make_similarity_model(cfg));
  return summarize(agent.kind(), test_agent(env, agent, cfg.episode_test, step_metrics));
}

TestSummary run_testing(const RunConfig& cfg, const std::string& checkpoint_path, bool write_files) {
  cfg.validate();
  std::unique_ptr<Agent> agent;
  if (checkpoint_path.empty()) {
    agent = restore_agent(cfg, nullptr);
  } else {
    const auto ck = read_json_file(checkpoint_path);
    agent = restore_agent(cfg, &ck);
  }
  std::ofstream steps;
  if (write_files) {
    ensure_dir(cfg.output_dir);
    if (cfg.step_metrics) {
      steps = open_out((fs::path(cfg.output_dir) / "step_metrics.csv").string());
      Environment::write_metrics_header(steps);
    }
  }
  TestSummary s = evaluate(cfg, *agent, cfg.test_seed, steps.is_open() ? &steps : nullptr);
  if (!write_files) return s;

  auto m = open_out((fs::path(cfg.output_dir) / "test_metrics.csv").string());
  m.precision(17);
  m << "episode,agent_kind,hsse_v2i,mean_reward,srs,successes,links,response_time\n";
  for (const auto& e : s.detail) {
    m << e.episode << ',' << s.agent_kind << ',' << e.hsse_v2i << ',' << e.mean_reward << ',' << e.srs << ','
      << e.successes << ',' << e.links << ',' << e.response_time << '\n';
  }
  auto t = open_out((fs::path(cfg.output_dir) / "demand_trace.csv").string());
  t.precision(17);
  t << "episode,step,link,sd_remaining\n";
  for (const auto& e : s.detail) {
    for (std::size_t st = 0; st < e.demand_trace.size(); ++st) {
      for (std::size_t k = 0; k < e.demand_trace[st].size(); ++k) {
        t << e.episode << ',' << st + 1 << ',' << k << ',' << e.demand_trace[st][k] << '\n';
      }
    }
  }
  nlohmann::json summary{{"agent_kind", s.agent_kind},         {"episodes", s.episodes},
                         {"mean_hsse_v2i", s.mean_hsse},       {"hsse_ci95", s.hsse_ci95},
                         {"mean_srs", s.mean_srs},             {"srs_ci95", s.srs_ci95},
                         {"mean_response_time", s.mean_response_time}, {"mean_reward", s.mean_reward}};
  write_json_file((fs::path(cfg.output_dir) / "test_summary.json").string(), summary);
  return s;
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p{"demand_multiplier", "v2i_power_dbm", "u_bits", "n_vehicles"};
  return p;
}

void apply_sweep_value(RunConfig& cfg, const std::string& parameter, double value) {
  if (parameter == "demand_multiplier") {
    cfg.env.demand_multiplier = value;
  } else if (parameter == "v2i_power_dbm") {
    cfg.env.v2i_power_dbm = value;
  } else if (parameter == "u_bits") {
    cfg.env.u_bits = value;
  } else if (parameter == "n_vehicles") {
    if (!(value >= 0) || value != std::floor(value)) throw ConfigError("sweep: n_vehicles values must be integers");
    cfg.env.n_vehicles = static_cast<std::size_t>(value);
  } else {
    std::string list;
    for (const auto& p : sweep_parameters()) list += (list.empty() ? "" : ", ") + p;
    throw UsageError("unsupported sweep parameter '" + parameter + "' (supported: " + list + ")");
  }
}

void write_sweep_header(std::ostream& os) {
  os << "parameter,value,agent_kind,seed,mean_hsse,hsse_ci95,mean_srs,srs_ci95,mean_response_time,mean_reward\n";
}

void write_sweep_row(std::ostream& os, const SweepRow& r) {
  const auto old = os.precision(17);
  os << r.parameter << ',' << r.value << ',' << r.agent_kind << ',' << r.seed << ',' << r.summary.mean_hsse << ','
     << r.summary.hsse_ci95 << ',' << r.summary.mean_srs << ',' << r.summary.srs_ci95 << ','
     << r.summary.mean_response_time << ',' << r.summary.mean_reward << '\n';
  os.precision(old);
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values) {
  {
    RunConfig probe = cfg;
    apply_sweep_value(probe, parameter, cfg.env.demand_multiplier);  // rejects unknown names early
  }
  if (values.empty()) throw UsageError("sweep: empty value list");
  for (double v : values) {
    RunConfig probe = cfg;
    apply_sweep_value(probe, parameter, v);
    probe.validate();
  }
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const std::vector<std::string> agents = cfg.sweep.agents.empty() ? std::vector<std::string>{cfg.agent_kind}
                                                                    : cfg.sweep.agents;
  const std::vector<std::uint64_t> seeds =
      cfg.sweep.seeds.empty() ? std::vector<std::uint64_t>{cfg.test_seed} : cfg.sweep.seeds;

  auto csv = open_out((fs::path(cfg.output_dir) / ("sweep_" + parameter + ".csv")).string());
  write_sweep_header(csv);
  std::vector<SweepRow> rows;
  for (const auto& kind : agents) {
    RunConfig base = cfg;
    base.agent_kind = kind;
    nlohmann::json trained;
    const bool learns = make_agent(kind, base.env_for(kind), base.agent, base.seed)->learns();
    if (learns && !cfg.sweep.retrain) {
      std::string path;
      for (const auto& [k, p] : cfg.sweep.checkpoints) {
        if (k == kind) path = p;
      }
      if (!path.empty()) {
        trained = read_json_file(path);
      } else {
        RunConfig tc = base;
        tc.output_dir = (fs::path(cfg.output_dir) / ("train_" + kind)).string();
        trained = run_training(tc).checkpoint;
      }
    }
    for (double v : values) {
      RunConfig point = base;
      apply_sweep_value(point, parameter, v);
      nlohmann::json ck = trained;
      if (learns && cfg.sweep.retrain) {
        RunConfig tc = point;
        std::ostringstream name;
        name << "train_" << kind << "_" << v;
        tc.output_dir = (fs::path(cfg.output_dir) / name.str()).string();
        ck = run_training(tc).checkpoint;
      }
      for (std::uint64_t seed : seeds) {
        auto agent = restore_agent(point, learns ? &ck : nullptr);
        SweepRow row;
        row.parameter = parameter;
        row.value = v;
        row.agent_kind = kind;
        row.seed = seed;
        row.summary = evaluate(point, *agent, seed);
        write_sweep_row(csv, row);
        row.summary.detail.clear();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace semshare
