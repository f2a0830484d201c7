#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semshare/environment.hpp"
#include "semshare/errors.hpp"
#include "oracles.hpp"

using namespace semshare;
using oracles::brute_force_sinrs;

namespace {

double db(double x) { return 10.0 * std::log10(x); }

double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

EnvConfig one_link_config() {
  EnvConfig c;
  c.q = 1;
  c.w = 1;
  c.n_vehicles = 4;
  c.varpi = 0.2;
  return c;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("action mapping boundaries and midpoint") {
  const double e = 1e-9;
  auto lo = map_action(-1 + e, -1 + e, -1 + e, 4, 4, 5, 40);
  CHECK(lo.band == 0);
  CHECK(lo.power_index == 0);
  CHECK(lo.u == 5.0);
  auto hi = map_action(1 - e, 1 - e, 1 - e, 4, 4, 5, 40);
  CHECK(hi.band == 3);
  CHECK(hi.power_index == 3);
  CHECK(hi.u == 40.0);
  auto mid = map_action(0, 0, 0, 4, 4, 5, 40);
  CHECK(mid.band == 2);
  CHECK(mid.power_index == 2);
  CHECK(mid.u == 23.0);
  EnvConfig c;
  CHECK(c.power_levels_dbm[mid.power_index] == 10.0);
  // Out-of-range and NaN inputs still map inside the action space.
  auto wild = map_action(5.0, -5.0, std::nan(""), 4, 4, 5, 40);
  CHECK(wild.band == 3);
  CHECK(wild.power_index == 0);
  CHECK(wild.u == 5.0);
  const auto bits = map_actions_bits({0.0, 0.9, -0.9, -0.2, 0.1, 0.1, 0.7, 0.7}, c);
  CHECK(bits[0].band == 2);
  CHECK(bits[0].power_index == 3);
  CHECK(bits[1].band == 0);
  CHECK(bits[1].u == c.u_bits);
  CHECK_THROWS_AS(map_actions({0.0}, c), UsageError);
}

TEST_CASE("SINR: lone V2I link") {
  ChannelRealization r;
  r.q = 1;
  r.w = 1;
  r.g_v2i = {2e-11};
  r.g_v2v = {1e-10};
  r.g_v2v_to_bs = {1e-12};
  r.g_v2i_to_v2v = {1e-13};
  r.g_cross = {0.0};
  const auto s = compute_sinrs(r, {{0, 0.0}}, 0.2, 1e-14);
  CHECK(s.v2i[0] == doctest::Approx(0.2 * 2e-11 / 1e-14).epsilon(1e-15));
  CHECK(s.v2v[0] == 0.0);
}

TEST_CASE("SINR: brute-force oracle on random instances") {
  Rng rng(12);
  double worst = 0.0;
  for (int it = 0; it < 1000; ++it) {
    ChannelRealization r;
    r.q = 1 + rng.index(4);
    r.w = 1 + rng.index(4);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& g : v) g = std::pow(10.0, rng.uniform(-15.0, -8.0));
    };
    fill(r.g_v2i, r.w);
    fill(r.g_v2v, r.q * r.w);
    fill(r.g_v2v_to_bs, r.q * r.w);
    fill(r.g_v2i_to_v2v, r.w * r.q);
    fill(r.g_cross, r.q * r.q * r.w);
    for (std::size_t k = 0; k < r.q; ++k) {
      for (std::size_t b = 0; b < r.w; ++b) r.g_cross[(k * r.q + k) * r.w + b] = 0.0;
    }
    std::vector<LinkAssignment> links(r.q);
    for (auto& l : links) {
      l.band = rng.index(r.w);
      l.power_w = rng.index(4) == 0 ? 0.0 : std::pow(10.0, rng.uniform(-3.0, -0.7));
    }
    const double noise = dbm_to_watts(-114.0);
    const auto a = compute_sinrs(r, links, 0.2, noise);
    const auto b = brute_force_sinrs(r, links, 0.2, noise);
    for (std::size_t i = 0; i < r.w; ++i) worst = std::max(worst, rel_err(a.v2i[i], b.v2i[i]));
    for (std::size_t i = 0; i < r.q; ++i) worst = std::max(worst, rel_err(a.v2v[i], b.v2v[i]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("SINR: two V2V links sharing a band interfere") {
  ChannelRealization r;
  r.q = 2;
  r.w = 1;
  r.g_v2i = {1e-11};
  r.g_v2v = {1e-10, 2e-10};
  r.g_v2v_to_bs = {1e-12, 3e-12};
  r.g_v2i_to_v2v = {1e-13, 2e-13};
  r.g_cross = {0.0, 5e-12, 7e-12, 0.0};  // [from * q + to]
  const double n = 1e-14;
  const auto s = compute_sinrs(r, {{0, 0.1}, {0, 0.2}}, 0.2, n);
  CHECK(s.v2v[0] == doctest::Approx(0.1 * 1e-10 / (n + 0.2 * 1e-13 + 0.2 * 7e-12)).epsilon(1e-14));
  CHECK(s.v2v[1] == doctest::Approx(0.2 * 2e-10 / (n + 0.2 * 2e-13 + 0.1 * 5e-12)).epsilon(1e-14));
  CHECK(s.v2i[0] == doctest::Approx(0.2 * 1e-11 / (n + 0.1 * 1e-12 + 0.2 * 3e-12)).epsilon(1e-14));
}

TEST_CASE("off power level is silent") {
  EnvConfig c;
  Environment env(c, 3);
  env.reset(0);
  const ChannelRealization real = env.realization();
  std::vector<LinkAction> acts(4);
  for (std::size_t k = 0; k < 4; ++k) acts[k] = {k, 3, 20.0};
  acts[1].power_index = 0;  // -100 dBm
  const auto r = env.step(acts);
  CHECK(r.links[1].sinr == 0.0);
  CHECK(r.links[1].delivered == 0.0);
  // Band 1 carries only its V2I user and the silent link.
  const double want = dbm_to_watts(23.0) * real.v2i(1) / dbm_to_watts(-114.0);
  CHECK(r.v2i_sinr[1] == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("demand and timing constants") {
  EnvConfig c;
  c.demand_multiplier = 1.0;
  CHECK(c.initial_demand() == doctest::Approx(53.0).epsilon(1e-15));
  c.mode = PayloadMode::bits;
  CHECK(c.initial_demand() == doctest::Approx(53.0 * 20.0).epsilon(1e-15));
  EnvConfig d;
  CHECK(d.time_budget == doctest::Approx(d.steps_per_episode * d.step_dt));
  CHECK(d.obs_per_link() == 35);
  CHECK(d.obs_dim() == 140);
  CHECK(d.varpi >= d.varpi_lower_bound());
  d.varpi = 0.5;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  EnvConfig e;
  e.time_budget = 0.2;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  EnvConfig f;
  f.n_vehicles = 7;
  CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("hand-worked one-link step") {
  EnvConfig c = one_link_config();
  // 2x2 table: xi rises linearly in u and SINR between the corners.
  auto model = std::make_shared<const SimilarityModel>(SimilarityModel({5.0, 40.0}, {-30.0, 50.0}, {0.0, 0.5, 0.5, 1.0}));
  Environment env(c, 1, model);
  env.reset(0);
  ChannelRealization r = env.realization();
  r.g_v2i = {1e-11};
  r.g_v2v = {1e-10};
  r.g_v2v_to_bs = {1e-13};
  r.g_v2i_to_v2v = {1e-15};
  r.g_cross = {0.0};
  env.set_realization(r);
  const auto res = env.step({LinkAction{0, 3, 40.0}});

  const double noise = std::pow(10.0, (-114.0 - 30.0) / 10.0);
  const double p = std::pow(10.0, (23.0 - 30.0) / 10.0);
  const double sinr_v2i = p * 1e-11 / (noise + p * 1e-13);
  const double sinr_v2v = p * 1e-10 / (noise + p * 1e-15);
  auto xi = [](double u, double s_db) {
    const double tu = (u - 5.0) / 35.0;
    const double ts = (s_db + 30.0) / 80.0;
    return (1 - tu) * ts * 0.5 + tu * (1 - ts) * 0.5 + tu * ts * 1.0;
  };
  const double xi_v2i = xi(20.0, db(sinr_v2i));
  const double xi_v2v = xi(40.0, db(sinr_v2v));
  REQUIRE(xi_v2v >= 0.9);
  const double r1 = xi_v2i / 20.0;
  const double r2 = xi_v2v / 40.0;
  CHECK(res.v2i_sinr[0] == doctest::Approx(sinr_v2i).epsilon(1e-13));
  CHECK(res.links[0].sinr == doctest::Approx(sinr_v2v).epsilon(1e-13));
  CHECK(res.links[0].xi == doctest::Approx(xi_v2v).epsilon(1e-13));
  CHECK(res.r1 == doctest::Approx(r1).epsilon(1e-13));
  CHECK(res.r2 == doctest::Approx(r2).epsilon(1e-13));
  CHECK(res.reward == doctest::Approx(0.5 * r1 + 0.5 * r2).epsilon(1e-13));
  const double delivered = 1e6 * xi_v2v / 40.0 * 1e-3;
  CHECK(res.links[0].delivered == doctest::Approx(delivered).epsilon(1e-13));
  CHECK(env.remaining()[0] == doctest::Approx(c.initial_demand() - delivered).epsilon(1e-13));
}

TEST_CASE("below the similarity threshold nothing is delivered") {
  EnvConfig c = one_link_config();
  Environment env(c, 2);
  env.reset(0);
  ChannelRealization r = env.realization();
  r.g_v2v = {1e-14};  // a few dB of SINR at most
  env.set_realization(r);
  const auto res = env.step({LinkAction{0, 3, 30.0}});
  CHECK(res.links[0].xi < 0.9);
  CHECK(res.links[0].delivered == 0.0);
  CHECK(res.r2 == 0.0);
}

TEST_CASE("lambda = 1 gives reward = r1") {
  EnvConfig c;
  c.lambda_weight = 1.0;
  Environment env(c, 4);
  env.reset(0);
  Rng rng(1);
  while (!env.done()) {
    std::vector<double> raw(12);
    for (auto& v : raw) v = rng.uniform(-1.0, 1.0);
    const auto r = env.step(map_actions(raw, c));
    CHECK(r.reward == r.r1);
  }
}

TEST_CASE("zero demand: every link counts as delivered") {
  EnvConfig c;
  c.demand_multiplier = 0.0;
  Environment env(c, 5);
  env.reset(0);
  const auto r = env.step(std::vector<LinkAction>(4, LinkAction{0, 3, 20.0}));
  CHECK(r.r2 == doctest::Approx(4 * c.varpi).epsilon(1e-15));
  CHECK(r.band_collisions == 0);
  CHECK(env.episode_stats().success == std::vector<bool>(4, true));
}

TEST_CASE("completed links stop interfering") {
  EnvConfig c = one_link_config();
  c.demand_multiplier = 1e-3;
  Environment env(c, 6);
  env.reset(0);
  ChannelRealization r = env.realization();
  r.g_v2v = {1e-9};
  r.g_v2i_to_v2v = {1e-16};
  env.set_realization(r);
  const auto first = env.step({LinkAction{0, 3, 40.0}});
  REQUIRE(first.links[0].completed);
  const ChannelRealization now = env.realization();
  const auto second = env.step({LinkAction{0, 3, 40.0}});
  const double noise = dbm_to_watts(-114.0);
  CHECK(second.v2i_sinr[0] == doctest::Approx(dbm_to_watts(23.0) * now.v2i(0) / noise).epsilon(1e-13));
  CHECK_FALSE(second.links[0].active);
  CHECK(second.r2 == c.varpi);
}

TEST_CASE("episode bookkeeping and misuse") {
  EnvConfig c;
  Environment env(c, 7);
  CHECK_THROWS_AS(env.step(std::vector<LinkAction>(4)), UsageError);
  env.reset(0);
  CHECK_THROWS_AS(env.step(std::vector<LinkAction>(3)), UsageError);
  CHECK_THROWS_AS(env.step(std::vector<LinkAction>(4, LinkAction{4, 0, 20.0})), UsageError);
  CHECK_THROWS_AS(env.step(std::vector<LinkAction>(4, LinkAction{0, 0, 41.0})), UsageError);
  Rng rng(2);
  std::vector<double> prev = env.remaining();
  std::size_t steps = 0;
  while (!env.done()) {
    std::vector<double> raw(12);
    for (auto& v : raw) v = rng.uniform(-1.0, 1.0);
    const auto r = env.step(map_actions(raw, c));
    ++steps;
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(env.remaining()[k] <= prev[k]);
      CHECK(env.remaining()[k] >= 0.0);
    }
    prev = env.remaining();
    const auto& o = r.observation;
    CHECK(o.link(0)[32] == doctest::Approx(env.remaining_time() / c.time_budget));
    CHECK(o.link(2)[31] == doctest::Approx(env.remaining()[2] / c.initial_demand()));
  }
  CHECK(steps == 100);
  CHECK(env.remaining_time() == doctest::Approx(0.0));
  CHECK_THROWS_AS(env.step(std::vector<LinkAction>(4)), UsageError);
}

TEST_CASE("observation layout") {
  EnvConfig c;
  Environment env(c, 8);
  const auto o = env.reset(0, 0.25, 0.5);
  REQUIRE(o.values.size() == 140);
  const auto& r = env.realization();
  auto gain = [](double g) { return (10.0 * std::log10(g) + 100.0) / 20.0; };
  for (std::size_t k = 0; k < 4; ++k) {
    const double* v = o.link(k);
    for (std::size_t b = 0; b < 4; ++b) CHECK(v[b] == doctest::Approx(gain(r.v2v(k, b))));
    std::size_t i = 4;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == k) continue;
      for (std::size_t b = 0; b < 4; ++b) CHECK(v[i++] == doctest::Approx(gain(r.cross(j, k, b))));
    }
    for (std::size_t b = 0; b < 4; ++b) CHECK(v[16 + b] == doctest::Approx(gain(r.v2i_to_v2v(b, k))));
    for (std::size_t b = 0; b < 4; ++b) CHECK(v[20 + b] == doctest::Approx(gain(r.v2v_to_bs(k, b))));
    CHECK(v[28] == -1.0);  // no previous V2V SINR: clamped at the floor
    CHECK(v[29] == doctest::Approx(0.5));
    CHECK(v[31] == 1.0);
    CHECK(v[32] == 1.0);
    CHECK(v[33] == 0.25);
    CHECK(v[34] == 0.5);
  }
}

TEST_CASE("same seed, same observations") {
  EnvConfig c;
  Environment a(c, 11), b(c, 11);
  CHECK(a.reset(0).values == b.reset(0).values);
  const std::vector<LinkAction> acts(4, LinkAction{1, 2, 25.0});
  CHECK(a.step(acts).observation.values == b.step(acts).observation.values);
}

TEST_CASE("large-scale state refreshes every 20 episodes") {
  EnvConfig c;
  Environment env(c, 13);
  env.reset(0);
  const nlohmann::json first = env.scenario();
  const double pl = env.large_scale().v2i[0].total_db();
  for (std::size_t e = 1; e < 20; ++e) {
    env.reset(e);
    CHECK(nlohmann::json(env.scenario()) == first);
    CHECK(env.large_scale().v2i[0].total_db() == pl);
  }
  env.reset(20);
  CHECK(nlohmann::json(env.scenario()) != first);
}

TEST_CASE("bits mode: r1 equals the bit hsse of the logged SINRs") {
  EnvConfig c;
  c.mode = PayloadMode::bits;
  c.lambda_weight = 1.0;
  Environment env(c, 14);
  env.reset(0);
  Rng rng(3);
  while (!env.done()) {
    std::vector<double> raw(8);
    for (auto& v : raw) v = rng.uniform(-1.0, 1.0);
    const auto r = env.step(map_actions_bits(raw, c));
    double sum = 0.0;
    for (double s : r.v2i_sinr) sum += std::log2(1.0 + s) / 20.0;
    CHECK(r.r1 == doctest::Approx(sum).epsilon(1e-14));
    CHECK(r.reward == r.r1);
  }
}

TEST_CASE("saved state resumes the same trajectory") {
  EnvConfig c;
  Environment a(c, 15);
  for (std::size_t e = 0; e < 21; ++e) a.reset(e);
  const auto saved = a.save_state();
  Environment b(c, 999);
  b.load_state(saved);
  const auto oa = a.reset(21);
  const auto ob = b.reset(21);
  CHECK(oa.values == ob.values);
  for (std::size_t e = 22; e < 45; ++e) {
    a.reset(e);
    b.reset(e);
  }
  CHECK(a.save_state() == b.save_state());
  EnvConfig other = c;
  other.n_vehicles = 30;
  Environment d(other, 1);
  CHECK_THROWS_AS(d.load_state(saved), ConfigError);
}

TEST_CASE("step metrics rows") {
  EnvConfig c;
  Environment env(c, 16);
  env.reset(0);
  std::ostringstream os;
  Environment::write_metrics_header(os);
  env.write_metrics(os, env.step(std::vector<LinkAction>(4, LinkAction{0, 1, 20.0})));
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) ++n;
  CHECK(n == 5);
}

}
