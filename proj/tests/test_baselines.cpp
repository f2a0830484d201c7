#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "semshare/baselines.hpp"
#include "semshare/errors.hpp"
#include "test_util.hpp"

using namespace semshare;
using testutil::max_rel_error;
using testutil::numeric_grad;

namespace {

AgentConfig small_agent() {
  AgentConfig c;
  c.hidden = {16, 16};
  c.batch_size = 8;
  c.buffer_capacity = 1000;
  c.explore_steps = 0;
  return c;
}

EnvConfig bits_env() {
  EnvConfig e;
  e.mode = PayloadMode::bits;
  return e;
}

Observation random_obs(Rng& rng, const EnvConfig& e) {
  Observation o;
  o.per_link = e.obs_per_link();
  o.values = testutil::uniform_vec(rng, e.obs_dim());
  return o;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("discrete action encoding") {
  DiscreteActionSpec s{4, 4};
  CHECK(s.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto [b, p] = s.decode(i);
    CHECK(s.encode(b, p) == i);
  }
  CHECK(s.decode(6) == std::pair<std::size_t, std::size_t>{1, 2});
  CHECK_THROWS_AS(s.decode(16), UsageError);
  CHECK_THROWS_AS(s.encode(4, 0), UsageError);
}

TEST_CASE("random actions: uniform marginals, trivial space, seeding") {
  DiscreteActionSpec s{4, 4};
  Rng rng(1);
  std::vector<int> band(4, 0), power(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    for (const auto& [b, p] : random_act(s, 1, rng)) {
      ++band[b];
      ++power[p];
    }
  }
  for (int c : band) CHECK(std::abs(c - n / 4.0) < 4 * std::sqrt(n * 0.25 * 0.75));
  for (int c : power) CHECK(std::abs(c - n / 4.0) < 4 * std::sqrt(n * 0.25 * 0.75));
  DiscreteActionSpec one{1, 1};
  for (const auto& [b, p] : random_act(one, 5, rng)) {
    CHECK(b == 0);
    CHECK(p == 0);
  }

  const EnvConfig e = bits_env();
  RandomAgent a(e, PayloadMode::bits, 3), b(e, PayloadMode::bits, 3);
  Observation o;
  for (int i = 0; i < 20; ++i) {
    const auto x = a.act(o, true), y = b.act(o, true);
    for (std::size_t k = 0; k < e.q; ++k) {
      CHECK(x[k].band == y[k].band);
      CHECK(x[k].power_index == y[k].power_index);
      CHECK(x[k].u == e.u_bits);
    }
  }
  EnvConfig se;
  RandomAgent sc(se, PayloadMode::semantic, 4);
  CHECK(sc.kind() == "random_sc");
  CHECK_FALSE(sc.learns());
  for (const auto& l : sc.act(o, false)) {
    CHECK(l.u >= se.semantic.u_min);
    CHECK(l.u <= se.semantic.u_max);
  }
}

TEST_CASE("double-Q target") {
  Rng rng(5);
  DenseNet net({3, 8, 4});
  net.init(rng, 0.0);
  const auto s = testutil::uniform_vec(rng, 2 * 3);
  // Same online and target: reduces to r + gamma max Q.
  const auto y = ddqn_target(net, net, s, {1.0, -1.0}, {0.0, 1.0}, 2, 0.9);
  const auto q = net.predict(s, 2);
  CHECK(y[0] == doctest::Approx(1.0 + 0.9 * *std::max_element(q.begin(), q.begin() + 4)).epsilon(1e-14));
  CHECK(y[1] == -1.0);

  // Different target: the value is read at the online argmax.
  DenseNet online({1, 2});
  DenseNet target({1, 2});
  std::fill(online.params().begin(), online.params().end(), 0.0);
  std::fill(target.params().begin(), target.params().end(), 0.0);
  online.bias(0)[0] = 1.0;  // argmax 0
  target.bias(0)[0] = 5.0;
  target.bias(0)[1] = 7.0;
  CHECK(ddqn_target(online, target, {0.0}, {0.5}, {0.0}, 1, 0.5)[0] == 3.0);
}

TEST_CASE("double-Q loss gradient") {
  Rng rng(6);
  DenseNet net({6, 10, 16});
  net.init(rng, 0.0);
  const auto s = testutil::uniform_vec(rng, 4 * 6);
  const std::vector<double> a = {0, 15, 7, 7};
  const auto y = testutil::uniform_vec(rng, 4);
  std::vector<double> g(net.param_count(), 0.0);
  ddqn_loss(net, s, a, 4, y, &g);
  const auto gn = numeric_grad([&] { return ddqn_loss(net, s, a, 4, y, nullptr); }, net.params());
  CHECK(max_rel_error(g, gn) < 1e-4);
  CHECK_THROWS_AS(ddqn_loss(net, s, {0, 16, 0, 0}, 4, y, nullptr), UsageError);
}

TEST_CASE("DDQN acts with the bit payload on every link") {
  const EnvConfig e = bits_env();
  DdqnAgent a(e, small_agent(), 7);
  Rng rng(8);
  const Observation o = random_obs(rng, e);
  const auto x = a.act(o, false);
  CHECK(x.size() == e.q);
  for (const auto& l : x) CHECK(l.u == e.u_bits);
  // Exploit mode is the argmax of the shared network per link block.
  const auto q = a.online().predict(o.values, e.q);
  for (std::size_t k = 0; k < e.q; ++k) {
    const auto row = q.begin() + static_cast<std::ptrdiff_t>(k * 16);
    const auto best = static_cast<std::size_t>(std::max_element(row, row + 16) - row);
    CHECK(a.spec().encode(x[k].band, x[k].power_index) == best);
  }
  for (int i = 0; i < 10; ++i) {
    a.act(o, true);
    a.record(o, rng.uniform(), random_obs(rng, e), false);
  }
  // Four links per step land in the buffer, so a batch of 8 exists after two steps.
  CHECK(a.buffer_size() == 40);
  CHECK(a.train_step().updated);
}

TEST_CASE("DDPG critic target and actor gradient") {
  const auto y = ddpg_critic_target({1.0, 2.0}, {0.0, 1.0}, {3.0, 100.0}, 0.5);
  CHECK(y == std::vector<double>{2.5, 2.0});

  // Scalar nets: actor a = tanh(w s), critic Q = c1 s + c2 a.
  DenseNet actor({1, 1}), critic({2, 1});
  actor.weights(0)[0] = 0.5;
  actor.bias(0)[0] = 0.0;
  critic.weights(0)[0] = 1.0;
  critic.weights(0)[1] = 2.0;
  critic.bias(0)[0] = 0.0;
  std::vector<double> g(actor.param_count(), 0.0);
  const double l = ddpg_actor_loss(actor, critic, {2.0}, 1, &g);
  CHECK(l == doctest::Approx(-(2.0 + 2.0 * std::tanh(1.0))));
  const double t = std::tanh(1.0);
  CHECK(g[actor.weight_offset(0)] == doctest::Approx(-2.0 * (1 - t * t) * 2.0));

  Rng rng(9);
  DenseNet act({5, 8, 3}), crit({8, 8, 1});
  act.init(rng, 0.0);
  crit.init(rng, 0.0);
  const auto s = testutil::uniform_vec(rng, 3 * 5);
  std::vector<double> ga(act.param_count(), 0.0);
  ddpg_actor_loss(act, crit, s, 3, &ga);
  CHECK(max_rel_error(ga, numeric_grad([&] { return ddpg_actor_loss(act, crit, s, 3, nullptr); }, act.params())) <
        1e-4);
  const auto sa = testutil::uniform_vec(rng, 3 * 8);
  const auto yy = testutil::uniform_vec(rng, 3);
  std::vector<double> gc(crit.param_count(), 0.0);
  critic_loss(crit, sa, 3, yy, &gc);
  CHECK(max_rel_error(gc, numeric_grad([&] { return critic_loss(crit, sa, 3, yy, nullptr); }, crit.params())) <
        1e-4);
}

TEST_CASE("DDPG without noise repeats its rollouts") {
  EnvConfig e;
  AgentConfig c = small_agent();
  c.ddpg_noise_std = 0.0;
  c.exploration.start = 0.0;
  c.exploration.floor = 0.0;
  DdpgAgent a(e, c, 1), b(e, c, 2);
  b.load(a.save());
  Rng rng(10);
  for (int i = 0; i < 5; ++i) {
    const Observation o = random_obs(rng, e);
    CHECK(a.raw_action(o, true) == b.raw_action(o, true));
    CHECK(a.raw_action(o, true) == a.raw_action(o, false));
  }
}

TEST_CASE("agent factory") {
  EnvConfig se;
  for (const auto& k : agent_kinds()) {
    EnvConfig e = se;
    e.mode = agent_mode(k);
    auto a = make_agent(k, e, small_agent(), 1);
    CHECK(a->kind() == k);
    CHECK(a->mode() == e.mode);
    // Checkpoints only load into the same kind.
    const auto j = a->save();
    for (const auto& other : agent_kinds()) {
      if (other == k) continue;
      EnvConfig eo = se;
      eo.mode = agent_mode(other);
      CHECK_THROWS_AS(make_agent(other, eo, small_agent(), 1)->load(j), ConfigError);
    }
  }
  CHECK_THROWS_AS(make_agent("ppo", se, small_agent(), 1), ConfigError);
  CHECK_THROWS_AS(make_agent("ddqn_bits", se, small_agent(), 1), ConfigError);
}

}
