#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "semshare/mobility.hpp"
#include "semshare/rng.hpp"

namespace semshare {

struct ChannelConfig {
  double carrier_ghz = 2.0;
  double bs_height = 25.0;
  double vehicle_height = 1.5;
  double bs_antenna_gain_db = 8.0;
  double vehicle_antenna_gain_db = 3.0;
  double bs_noise_figure_db = 5.0;
  double vehicle_noise_figure_db = 9.0;
  double v2v_shadow_std_db = 3.0;
  double v2i_shadow_std_db = 8.0;
  double v2v_decorrelation_m = 10.0;
  double v2i_decorrelation_m = 50.0;
  double los_threshold_m = 7.0;

  void validate() const;
};

// 128.1 + 37.6 log10(d / 1 km), d the 3-D tx-BS distance.
double v2i_pathloss(double d3d);

// Manhattan street-canyon model: LOS on the Euclidean distance when the
// shorter leg is under the LOS threshold, otherwise the NLOS corner model,
// minimised over both leg orderings so it is reciprocal.
double v2v_pathloss(double d_hor, double d_ver, double carrier_ghz, double tx_height = 1.5,
                    double rx_height = 1.5, double los_threshold = 7.0);
bool v2v_is_los(double d_hor, double d_ver, double los_threshold = 7.0);

// Correlated log-normal shadowing update over a displacement delta_d.
double update_shadowing(double old_db, double delta_d, double d_dec, double sigma_db, Rng& rng);

// Small-scale power gain |h|^2 ~ Exp(1).
double sample_fast_fading(Rng& rng);

// Shadowing kept per vehicle (towards the BS) and per unordered vehicle pair.
struct FadingState {
  std::vector<double> vehicle_bs_db;
  std::vector<double> vehicle_pair_db;  // n x n, symmetric
  std::vector<Vec2> last_positions;

  std::size_t vehicle_count() const { return last_positions.size(); }
  double pair(std::size_t a, std::size_t b) const {
    return vehicle_pair_db[a * vehicle_count() + b];
  }
};

FadingState init_fading(const std::vector<VehicleState>& vehicles, const ChannelConfig& cfg, Rng& rng);
// Advances every shadowing value by the displacement since the last update.
void update_fading(FadingState& state, const ScenarioState& scenario, const ChannelConfig& cfg, Rng& rng);

// Attenuation in dB of one path including antenna gains and receiver noise
// figure (so that gain = 10^(-total/10) * fast fading, noise referenced).
struct PathLoss {
  double pathloss_db = 0.0;
  double shadow_db = 0.0;
  double offset_db = 0.0;  // noise figure minus antenna gains
  double total_db() const { return pathloss_db + shadow_db + offset_db; }
  double linear() const;
};

// Frequency-flat part of every path for a given topology; constant between
// position updates.
struct LargeScale {
  std::size_t q = 0;
  std::size_t w = 0;
  std::vector<PathLoss> v2i;          // [w] V2I user w -> BS
  std::vector<PathLoss> v2v;          // [q] tx q -> rx q
  std::vector<PathLoss> v2v_to_bs;    // [q] tx q -> BS
  std::vector<PathLoss> v2i_to_v2v;   // [w * q + k] V2I user w -> rx k
  std::vector<PathLoss> cross;        // [q' * q + k] tx q' -> rx k (q' != k)
};

LargeScale compute_large_scale(const LinkTopology& topology, const std::vector<VehicleState>& vehicles,
                               const FadingState& fading, const ChannelConfig& cfg);

// Per sub-band linear power gains for every signal and interference path.
struct ChannelRealization {
  std::size_t q = 0;
  std::size_t w = 0;
  std::vector<double> g_v2i;         // [w]: V2I user w -> BS on band w
  std::vector<double> g_v2v;         // [q * W + b]
  std::vector<double> g_v2v_to_bs;   // [q * W + b]
  std::vector<double> g_v2i_to_v2v;  // [w * Q + k]: V2I user w -> V2V rx k on band w
  std::vector<double> g_cross;       // [(q' * Q + k) * W + b], zero on the diagonal

  double v2i(std::size_t band) const { return g_v2i[band]; }
  double v2v(std::size_t link, std::size_t band) const { return g_v2v[link * w + band]; }
  double v2v_to_bs(std::size_t link, std::size_t band) const { return g_v2v_to_bs[link * w + band]; }
  double v2i_to_v2v(std::size_t band, std::size_t link) const { return g_v2i_to_v2v[band * q + link]; }
  double cross(std::size_t from, std::size_t to, std::size_t band) const {
    return g_cross[(from * q + to) * w + band];
  }
  // Number of strictly positive path gains.
  std::size_t populated() const;
};

// Draws fresh fast fading on top of the large-scale gains.
ChannelRealization realize(const LargeScale& large, Rng& rng);

ChannelRealization build_channel_realization(const LinkTopology& topology,
                                             const std::vector<VehicleState>& vehicles,
                                             const FadingState& fading, const ChannelConfig& cfg,
                                             Rng& rng);

// CSV dump: path_id,pathloss_db,shadow_db,fast_linear,total_linear
void write_realization_csv(std::ostream& os, const LargeScale& large, const ChannelRealization& real);

}  // namespace semshare
