#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semshare/channel.hpp"
#include "semshare/errors.hpp"

using namespace semshare;

namespace {

double sample_std(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ScenarioState default_scene(std::uint64_t seed, LinkTopology* topo) {
  GridSpec g;
  Rng rng(seed);
  auto s = init_scenario(g, 20, 8, rng);
  *topo = select_topology(s, 4, 4, rng);
  s.topology = *topo;
  return s;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("V2I path loss values") {
  CHECK(v2i_pathloss(1000.0) == doctest::Approx(128.1).epsilon(1e-14));
  CHECK(v2i_pathloss(500.0) == doctest::Approx(116.78).epsilon(1e-4));
  CHECK(v2i_pathloss(100.0) == doctest::Approx(90.5).epsilon(1e-12));
  CHECK_THROWS_AS(v2i_pathloss(0.0), DomainError);
}

TEST_CASE("V2V path loss branches against hand evaluation") {
  // fc = 2 GHz, both antennas 1.5 m: effective heights 0.5 m, breakpoint
  // 4 * 0.25 * 2e9 / 3e8 = 6.67 m.
  CHECK(v2v_is_los(3.0, 0.0));
  const double los3 = 22.7 * std::log10(3.0) + 41.0 + 20.0 * std::log10(0.4);
  CHECK(v2v_pathloss(3.0, 0.0, 2.0) == doctest::Approx(los3).epsilon(1e-13));

  CHECK_FALSE(v2v_is_los(50.0, 50.0));
  const double los50 = 40.0 * std::log10(50.0) + 9.45 - 2 * 17.3 * std::log10(0.5) + 2.7 * std::log10(0.4);
  const double n = 2.8 - 0.0024 * 50.0;
  const double nlos = los50 + 20.0 - 12.5 * n + 10.0 * n * std::log10(50.0) + 3.0 * std::log10(0.4);
  CHECK(v2v_pathloss(50.0, 50.0, 2.0) == doctest::Approx(nlos).epsilon(1e-13));

  // Far along one street: the n_j floor of 1.84 applies for the first leg.
  const double los500 = 40.0 * std::log10(500.0) + 9.45 - 2 * 17.3 * std::log10(0.5) + 2.7 * std::log10(0.4);
  const double nlos_a = los500 + 20.0 - 12.5 * 1.84 + 10.0 * 1.84 * std::log10(20.0) + 3.0 * std::log10(0.4);
  const double los20 = 40.0 * std::log10(20.0) + 9.45 - 2 * 17.3 * std::log10(0.5) + 2.7 * std::log10(0.4);
  const double n20 = 2.8 - 0.0024 * 20.0;
  const double nlos_b = los20 + 20.0 - 12.5 * n20 + 10.0 * n20 * std::log10(500.0) + 3.0 * std::log10(0.4);
  CHECK(v2v_pathloss(500.0, 20.0, 2.0) == doctest::Approx(std::min(nlos_a, nlos_b)).epsilon(1e-13));
}

TEST_CASE("V2V path loss is reciprocal") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.0, 800.0);
    const double b = rng.uniform(0.0, 800.0);
    CHECK(v2v_pathloss(a, b, 2.0) == v2v_pathloss(b, a, 2.0));
  }
}

TEST_CASE("path loss grows with distance along a street") {
  // The cross-street branch is not monotone in both legs at once (its
  // exponent shrinks with the first leg), so only single-leg growth is checked.
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) {
    const double a = rng.uniform(3.0, 600.0);
    CHECK(v2v_pathloss(2 * a, 0.0, 2.0) > v2v_pathloss(a, 0.0, 2.0));
    const double da = rng.uniform(7.0, 600.0);
    const double db = rng.uniform(7.0, 600.0);
    CHECK(v2v_pathloss(da, 2 * db, 2.0) > v2v_pathloss(da, db, 2.0));
    const double d = rng.uniform(1.0, 2000.0);
    CHECK(v2i_pathloss(2 * d) > v2i_pathloss(d));
  }
}

TEST_CASE("shadowing: zero displacement keeps the value") {
  Rng rng(1);
  for (double old : {-7.25, 0.0, 3.0, 12.5}) CHECK(update_shadowing(old, 0.0, 10.0, 3.0, rng) == old);
}

TEST_CASE("shadowing: stationary std over a long chain") {
  Rng rng(77);
  double s = rng.normal(0.0, 3.0);
  std::vector<double> chain;
  chain.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    s = update_shadowing(s, 1.0, 10.0, 3.0, rng);
    chain.push_back(s);
  }
  const double sd = sample_std(chain);
  CHECK(sd >= 2.85);
  CHECK(sd <= 3.15);
}

TEST_CASE("shadowing: large displacement forgets the old value") {
  Rng rng(3);
  std::vector<double> xs;
  double corr = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double old = 100.0 * ((i % 2) ? 1.0 : -1.0);
    const double v = update_shadowing(old, 1e6, 50.0, 8.0, rng);
    xs.push_back(v);
    corr += v * old;
  }
  CHECK(sample_std(xs) == doctest::Approx(8.0).epsilon(0.03));
  CHECK(std::abs(corr / 20000 / 100.0) < 0.3);
}

TEST_CASE("fast fading calibration") {
  Rng rng(99);
  const int n = 1000000;
  double sum = 0.0;
  int above = 0;
  bool positive = true;
  for (int i = 0; i < n; ++i) {
    const double s = sample_fast_fading(rng);
    positive = positive && s > 0;
    sum += s;
    if (s > 1.0) ++above;
  }
  CHECK(positive);
  CHECK(sum / n >= 0.99);
  CHECK(sum / n <= 1.01);
  CHECK(std::abs(static_cast<double>(above) / n - std::exp(-1.0)) <= 0.005);
}

TEST_CASE("large-scale offsets and realization counts") {
  LinkTopology topo;
  const auto s = default_scene(21, &topo);
  ChannelConfig cfg;
  Rng rng(2);
  const auto fading = init_fading(s.vehicles, cfg, rng);
  const auto large = compute_large_scale(topo, s.vehicles, fading, cfg);
  CHECK(large.v2i[0].offset_db == -6.0);
  CHECK(large.v2v[0].offset_db == 3.0);
  CHECK(large.v2v_to_bs[0].offset_db == -6.0);
  const auto real = realize(large, rng);
  CHECK(real.populated() == 4 + 16 + 16 + 16 + 48);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t b = 0; b < 4; ++b) CHECK(real.cross(k, k, b) == 0.0);
  }
}

TEST_CASE("gain is large-scale times an Exp(1) draw") {
  LinkTopology topo;
  const auto s = default_scene(22, &topo);
  ChannelConfig cfg;
  Rng rng(5);
  const auto fading = init_fading(s.vehicles, cfg, rng);
  const auto large = compute_large_scale(topo, s.vehicles, fading, cfg);
  const int n = 20000;
  double m_v2i = 0.0, m_v2v = 0.0, m_cross = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto r = realize(large, rng);
    m_v2i += r.v2i(1) / large.v2i[1].linear();
    m_v2v += r.v2v(2, 3) / large.v2v[2].linear();
    m_cross += r.cross(0, 3, 1) / large.cross[0 * 4 + 3].linear();
  }
  CHECK(m_v2i / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(m_v2v / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(m_cross / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("identical inputs give identical realizations") {
  LinkTopology topo;
  const auto s = default_scene(23, &topo);
  ChannelConfig cfg;
  Rng a(8), b(8);
  const auto ra = build_channel_realization(topo, s.vehicles, init_fading(s.vehicles, cfg, a), cfg, a);
  const auto rb = build_channel_realization(topo, s.vehicles, init_fading(s.vehicles, cfg, b), cfg, b);
  CHECK(ra.g_v2i == rb.g_v2i);
  CHECK(ra.g_v2v == rb.g_v2v);
  CHECK(ra.g_cross == rb.g_cross);
  CHECK(ra.g_v2i_to_v2v == rb.g_v2i_to_v2v);
  CHECK(ra.g_v2v_to_bs == rb.g_v2v_to_bs);
}

TEST_CASE("fading update keeps the shadowing std") {
  GridSpec g;
  Rng rng(31);
  auto s = init_scenario(g, 40, 8, rng);
  ChannelConfig cfg;
  auto f = init_fading(s.vehicles, cfg, rng);
  for (int t = 0; t < 200; ++t) {
    s = step_positions(s, 1.0, {}, rng);
    update_fading(f, s, cfg, rng);
  }
  std::vector<double> pair;
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = i + 1; j < 40; ++j) pair.push_back(f.pair(i, j));
  }
  CHECK(sample_std(pair) == doctest::Approx(3.0).epsilon(0.1));
  CHECK(sample_std(f.vehicle_bs_db) == doctest::Approx(8.0).epsilon(0.35));
}

TEST_CASE("realization csv has one row per path") {
  LinkTopology topo;
  const auto s = default_scene(24, &topo);
  ChannelConfig cfg;
  Rng rng(1);
  const auto f = init_fading(s.vehicles, cfg, rng);
  const auto large = compute_large_scale(topo, s.vehicles, f, cfg);
  const auto real = realize(large, rng);
  std::ostringstream os;
  write_realization_csv(os, large, real);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "path_id,pathloss_db,shadow_db,fast_linear,total_linear");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 100);
}

TEST_CASE("config validation") {
  ChannelConfig c;
  c.validate();
  c.v2v_decorrelation_m = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

}
