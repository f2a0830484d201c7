#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "semshare/errors.hpp"
#include "semshare/harness.hpp"

using namespace semshare;

namespace {

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(path);
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--values: '" + tok + "' is not a number");
    }
  }
  return out;
}

void print_summary(const TestSummary& s) {
  std::printf("%s: episodes=%zu hsse_v2i=%.6g (+-%.3g) srs=%.4f (+-%.3g) response_time=%.6g s\n",
              s.agent_kind.c_str(), s.episodes, s.mean_hsse, s.hsse_ci95, s.mean_srs, s.srs_ci95,
              s.mean_response_time);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware V2V spectrum sharing simulator and trainer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string agent_kind;
  std::string checkpoint;
  std::string resume;
  std::size_t episodes = 0;
  long long seed = -1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run configuration");
    sub->add_option("-o,--output", output_dir, "output directory (overrides config)");
    sub->add_option("-a,--agent", agent_kind, "agent kind (overrides config)");
  };

  auto* train = app.add_subcommand("train", "train an agent");
  common(train);
  train->add_option("--episodes", episodes, "training episodes (overrides config)");
  train->add_option("--seed", seed, "training seed (overrides config)");
  train->add_option("--resume", resume, "checkpoint to continue from");

  auto* test = app.add_subcommand("test", "evaluate a trained agent");
  common(test);
  test->add_option("--checkpoint", checkpoint, "checkpoint from train (not needed for random agents)");
  test->add_option("--episodes", episodes, "test episodes (overrides config)");
  test->add_option("--seed", seed, "test seed (overrides config)");

  auto* sweep = app.add_subcommand("sweep", "evaluate across values of one parameter");
  common(sweep);
  std::string parameter;
  std::string values;
  sweep->add_option("-p,--parameter", parameter, "demand_multiplier, v2i_power_dbm, u_bits or n_vehicles");
  sweep->add_option("--values", values, "comma-separated values");

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config, print it resolved");
  validate->add_option("-c,--config", config_path, "JSON run configuration")->required();

  auto* dump = app.add_subcommand("dump-similarity-table", "write the similarity table as CSV");
  dump->add_option("-c,--config", config_path, "JSON run configuration");
  std::string dump_out;
  dump->add_option("-o,--output", dump_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = load_or_default(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (!agent_kind.empty()) cfg.agent_kind = agent_kind;

    if (*train) {
      if (episodes) cfg.episode_max = episodes;
      if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.validate();
      const auto r = run_training(cfg, resume);
      const auto& last = r.log.back();
      std::printf("%s: trained to episode %zu, last srs=%.4f reward=%.6g\n", cfg.agent_kind.c_str(),
                  last.episode + 1, last.srs, last.mean_reward);
      std::printf("log: %s\ncheckpoint: %s\n", r.log_path.c_str(), r.checkpoint_path.c_str());
    } else if (*test) {
      if (episodes) cfg.episode_test = episodes;
      if (seed >= 0) cfg.test_seed = static_cast<std::uint64_t>(seed);
      cfg.validate();
      print_summary(run_testing(cfg, checkpoint));
    } else if (*sweep) {
      if (!parameter.empty()) cfg.sweep.parameter = parameter;
      if (!values.empty()) cfg.sweep.values = parse_values(values);
      if (cfg.sweep.parameter.empty()) throw UsageError("sweep: no parameter given (--parameter or sweep.parameter)");
      for (const auto& row : run_sweep(cfg, cfg.sweep.parameter, cfg.sweep.values)) {
        std::printf("%s=%g seed=%llu ", row.parameter.c_str(), row.value,
                    static_cast<unsigned long long>(row.seed));
        print_summary(row.summary);
      }
    } else if (*validate) {
      std::cout << to_json(cfg).dump(2) << '\n';
    } else if (*dump) {
      const auto model = make_similarity_model(cfg);
      if (dump_out.empty()) {
        write_similarity_csv(std::cout, *model);
      } else {
        std::ofstream os(dump_out);
        if (!os) throw IoError("cannot write '" + dump_out + "'");
        write_similarity_csv(os, *model);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
