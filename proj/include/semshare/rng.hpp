#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace semshare {

// Seeded random stream. All draws go through the raw 64-bit engine so the
// state can be captured and restored exactly (no cached normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Exp(1); strictly positive.
  double exponential();
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  // Derive an independent stream, e.g. one per subsystem.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::string state() const;
  void set_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace semshare
