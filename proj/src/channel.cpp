#include "semshare/channel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "semshare/errors.hpp"

namespace semshare {

namespace {

constexpr double kSpeedOfLight = 3e8;
// Antenna heights are reduced by this environment height for the breakpoint.
constexpr double kEffectiveHeightOffset = 1.0;
constexpr double kMinLosDistance = 3.0;

double los_pathloss(double d, double fc_ghz, double h_tx, double h_rx) {
  const double ht = h_tx - kEffectiveHeightOffset;
  const double hr = h_rx - kEffectiveHeightOffset;
  const double d_bp = 4.0 * ht * hr * fc_ghz * 1e9 / kSpeedOfLight;
  d = std::max(d, kMinLosDistance);
  if (d < d_bp) return 22.7 * std::log10(d) + 41.0 + 20.0 * std::log10(fc_ghz / 5.0);
  return 40.0 * std::log10(d) + 9.45 - 17.3 * std::log10(ht) - 17.3 * std::log10(hr) +
         2.7 * std::log10(fc_ghz / 5.0);
}

// d_a: distance along the street of the transmitter, d_b: along the
// perpendicular street.
double nlos_pathloss(double d_a, double d_b, double fc_ghz, double h_tx, double h_rx) {
  const double n_j = std::max(2.8 - 0.0024 * d_a, 1.84);
  return los_pathloss(d_a, fc_ghz, h_tx, h_rx) + 20.0 - 12.5 * n_j + 10.0 * n_j * std::log10(d_b) +
         3.0 * std::log10(fc_ghz / 5.0);
}

}  // namespace

void ChannelConfig::validate() const {
  if (!(carrier_ghz > 0)) throw ConfigError("channel: carrier_ghz must be > 0");
  if (!(bs_height > kEffectiveHeightOffset && vehicle_height > kEffectiveHeightOffset)) {
    throw ConfigError("channel: antenna heights must exceed 1 m");
  }
  if (!(v2v_shadow_std_db >= 0 && v2i_shadow_std_db >= 0)) {
    throw ConfigError("channel: shadowing std must be >= 0");
  }
  if (!(v2v_decorrelation_m > 0 && v2i_decorrelation_m > 0)) {
    throw ConfigError("channel: decorrelation distances must be > 0");
  }
  if (!(los_threshold_m > 0)) throw ConfigError("channel: los_threshold_m must be > 0");
}

double v2i_pathloss(double d3d) {
  if (!(d3d > 0)) throw DomainError("v2i_pathloss: distance must be > 0");
  return 128.1 + 37.6 * std::log10(d3d / 1000.0);
}

bool v2v_is_los(double d_hor, double d_ver, double los_threshold) {
  return std::min(d_hor, d_ver) < los_threshold;
}

double v2v_pathloss(double d_hor, double d_ver, double carrier_ghz, double tx_height, double rx_height,
                    double los_threshold) {
  if (!(d_hor >= 0 && d_ver >= 0)) throw DomainError("v2v_pathloss: distances must be >= 0");
  if (d_hor == 0 && d_ver == 0) throw DomainError("v2v_pathloss: zero total distance");
  if (v2v_is_los(d_hor, d_ver, los_threshold)) {
    return los_pathloss(std::hypot(d_hor, d_ver), carrier_ghz, tx_height, rx_height);
  }
  return std::min(nlos_pathloss(d_hor, d_ver, carrier_ghz, tx_height, rx_height),
                  nlos_pathloss(d_ver, d_hor, carrier_ghz, tx_height, rx_height));
}

double update_shadowing(double old_db, double delta_d, double d_dec, double sigma_db, Rng& rng) {
  const double x = rng.normal(0.0, sigma_db);
  const double rho = std::exp(-delta_d / d_dec);
  return rho * old_db + std::sqrt(1.0 - std::exp(-2.0 * delta_d / d_dec)) * x;
}

double sample_fast_fading(Rng& rng) { return rng.exponential(); }

double PathLoss::linear() const { return std::pow(10.0, -total_db() / 10.0); }

FadingState init_fading(const std::vector<VehicleState>& vehicles, const ChannelConfig& cfg, Rng& rng) {
  const std::size_t n = vehicles.size();
  FadingState st;
  st.vehicle_bs_db.resize(n);
  st.vehicle_pair_db.assign(n * n, 0.0);
  st.last_positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.vehicle_bs_db[i] = rng.normal(0.0, cfg.v2i_shadow_std_db);
    st.last_positions[i] = vehicles[i].position;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = rng.normal(0.0, cfg.v2v_shadow_std_db);
      st.vehicle_pair_db[i * n + j] = s;
      st.vehicle_pair_db[j * n + i] = s;
    }
  }
  return st;
}

void update_fading(FadingState& st, const ScenarioState& scenario, const ChannelConfig& cfg, Rng& rng) {
  const auto& vehicles = scenario.vehicles;
  const std::size_t n = vehicles.size();
  if (st.vehicle_count() != n) throw UsageError("update_fading: vehicle count changed");
  std::vector<double> moved(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Minimum-image displacement: wrapping at an edge is not movement.
    const Vec2 a = st.last_positions[i];
    const Vec2 b = vehicles[i].position;
    double dx = std::abs(a.x - b.x);
    double dy = std::abs(a.y - b.y);
    dx = std::min(dx, scenario.grid.area_width - dx);
    dy = std::min(dy, scenario.grid.area_height - dy);
    moved[i] = std::hypot(dx, dy);
    st.vehicle_bs_db[i] =
        update_shadowing(st.vehicle_bs_db[i], moved[i], cfg.v2i_decorrelation_m, cfg.v2i_shadow_std_db, rng);
    st.last_positions[i] = b;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = update_shadowing(st.vehicle_pair_db[i * n + j], moved[i] + moved[j],
                                        cfg.v2v_decorrelation_m, cfg.v2v_shadow_std_db, rng);
      st.vehicle_pair_db[i * n + j] = s;
      st.vehicle_pair_db[j * n + i] = s;
    }
  }
}

namespace {

PathLoss vehicle_to_bs(const VehicleState& v, std::size_t id, Vec2 bs, const FadingState& fading,
                       const ChannelConfig& cfg) {
  const double dh = cfg.bs_height - cfg.vehicle_height;
  const double d3d = std::sqrt(std::pow(v.position.x - bs.x, 2) + std::pow(v.position.y - bs.y, 2) + dh * dh);
  PathLoss p;
  p.pathloss_db = v2i_pathloss(d3d);
  p.shadow_db = fading.vehicle_bs_db[id];
  p.offset_db = cfg.bs_noise_figure_db - cfg.vehicle_antenna_gain_db - cfg.bs_antenna_gain_db;
  return p;
}

PathLoss vehicle_to_vehicle(const std::vector<VehicleState>& vehicles, std::size_t a, std::size_t b,
                            const FadingState& fading, const ChannelConfig& cfg) {
  PathLoss p;
  double dx = std::abs(vehicles[a].position.x - vehicles[b].position.x);
  const double dy = std::abs(vehicles[a].position.y - vehicles[b].position.y);
  // Co-located endpoints (a V2I user that also receives V2V) use the LOS floor.
  if (dx == 0 && dy == 0) dx = kMinLosDistance;
  p.pathloss_db = v2v_pathloss(dx, dy, cfg.carrier_ghz, cfg.vehicle_height, cfg.vehicle_height,
                               cfg.los_threshold_m);
  p.shadow_db = a == b ? 0.0 : fading.pair(a, b);
  p.offset_db = cfg.vehicle_noise_figure_db - 2.0 * cfg.vehicle_antenna_gain_db;
  return p;
}

}  // namespace

LargeScale compute_large_scale(const LinkTopology& topology, const std::vector<VehicleState>& vehicles,
                               const FadingState& fading, const ChannelConfig& cfg) {
  LargeScale ls;
  ls.q = topology.v2v_pairs.size();
  ls.w = topology.v2i_users.size();
  const auto& pairs = topology.v2v_pairs;
  for (std::size_t u : topology.v2i_users) {
    ls.v2i.push_back(vehicle_to_bs(vehicles[u], u, topology.bs_position, fading, cfg));
  }
  for (const auto& p : pairs) {
    ls.v2v.push_back(vehicle_to_vehicle(vehicles, p.tx, p.rx, fading, cfg));
    ls.v2v_to_bs.push_back(vehicle_to_bs(vehicles[p.tx], p.tx, topology.bs_position, fading, cfg));
  }
  for (std::size_t u : topology.v2i_users) {
    for (const auto& p : pairs) ls.v2i_to_v2v.push_back(vehicle_to_vehicle(vehicles, u, p.rx, fading, cfg));
  }
  ls.cross.resize(ls.q * ls.q);
  for (std::size_t from = 0; from < ls.q; ++from) {
    for (std::size_t to = 0; to < ls.q; ++to) {
      if (from == to) continue;
      ls.cross[from * ls.q + to] = vehicle_to_vehicle(vehicles, pairs[from].tx, pairs[to].rx, fading, cfg);
    }
  }
  return ls;
}

std::size_t ChannelRealization::populated() const {
  auto count = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double g) { return g > 0; }));
  };
  return count(g_v2i) + count(g_v2v) + count(g_v2v_to_bs) + count(g_v2i_to_v2v) + count(g_cross);
}

ChannelRealization realize(const LargeScale& large, Rng& rng) {
  const std::size_t q = large.q;
  const std::size_t w = large.w;
  ChannelRealization r;
  r.q = q;
  r.w = w;
  r.g_v2i.resize(w);
  r.g_v2v.resize(q * w);
  r.g_v2v_to_bs.resize(q * w);
  r.g_v2i_to_v2v.resize(w * q);
  r.g_cross.assign(q * q * w, 0.0);
  for (std::size_t b = 0; b < w; ++b) r.g_v2i[b] = large.v2i[b].linear() * sample_fast_fading(rng);
  for (std::size_t k = 0; k < q; ++k) {
    const double ls = large.v2v[k].linear();
    for (std::size_t b = 0; b < w; ++b) r.g_v2v[k * w + b] = ls * sample_fast_fading(rng);
  }
  for (std::size_t k = 0; k < q; ++k) {
    const double ls = large.v2v_to_bs[k].linear();
    for (std::size_t b = 0; b < w; ++b) r.g_v2v_to_bs[k * w + b] = ls * sample_fast_fading(rng);
  }
  for (std::size_t b = 0; b < w; ++b) {
    for (std::size_t k = 0; k < q; ++k) {
      r.g_v2i_to_v2v[b * q + k] = large.v2i_to_v2v[b * q + k].linear() * sample_fast_fading(rng);
    }
  }
  for (std::size_t from = 0; from < q; ++from) {
    for (std::size_t to = 0; to < q; ++to) {
      if (from == to) continue;
      const double ls = large.cross[from * q + to].linear();
      for (std::size_t b = 0; b < w; ++b) r.g_cross[(from * q + to) * w + b] = ls * sample_fast_fading(rng);
    }
  }
  return r;
}

ChannelRealization build_channel_realization(const LinkTopology& topology,
                                             const std::vector<VehicleState>& vehicles,
                                             const FadingState& fading, const ChannelConfig& cfg, Rng& rng) {
  return realize(compute_large_scale(topology, vehicles, fading, cfg), rng);
}

void write_realization_csv(std::ostream& os, const LargeScale& large, const ChannelRealization& real) {
  os << "path_id,pathloss_db,shadow_db,fast_linear,total_linear\n";
  os.precision(17);
  auto row = [&](const std::string& id, const PathLoss& p, double total) {
    os << id << ',' << p.pathloss_db << ',' << p.shadow_db << ',' << total / p.linear() << ',' << total << '\n';
  };
  const std::size_t q = large.q;
  const std::size_t w = large.w;
  for (std::size_t b = 0; b < w; ++b) row("v2i_" + std::to_string(b), large.v2i[b], real.v2i(b));
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t b = 0; b < w; ++b) {
      row("v2v_" + std::to_string(k) + "_b" + std::to_string(b), large.v2v[k], real.v2v(k, b));
    }
  }
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t b = 0; b < w; ++b) {
      row("v2v_bs_" + std::to_string(k) + "_b" + std::to_string(b), large.v2v_to_bs[k], real.v2v_to_bs(k, b));
    }
  }
  for (std::size_t b = 0; b < w; ++b) {
    for (std::size_t k = 0; k < q; ++k) {
      row("v2i_v2v_" + std::to_string(b) + "_" + std::to_string(k), large.v2i_to_v2v[b * q + k],
          real.v2i_to_v2v(b, k));
    }
  }
  for (std::size_t from = 0; from < q; ++from) {
    for (std::size_t to = 0; to < q; ++to) {
      if (from == to) continue;
      for (std::size_t b = 0; b < w; ++b) {
        row("cross_" + std::to_string(from) + "_" + std::to_string(to) + "_b" + std::to_string(b),
            large.cross[from * q + to], real.cross(from, to, b));
      }
    }
  }
}

}  // namespace semshare
