#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semshare/rng.hpp"

namespace semshare {

struct Batch {
  std::size_t size = 0;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<double> states;       // size x obs_dim
  std::vector<double> actions;      // size x act_dim
  std::vector<double> rewards;      // size
  std::vector<double> next_states;  // size x obs_dim
  std::vector<double> done;         // size, 1.0 for terminal
  std::vector<std::size_t> indices;
};

// Ring buffer of transitions. States are kept in single precision; storage
// grows on demand up to the capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim);

  void add(const double* state, const double* action, double reward, const double* next_state, bool done);
  void add(const std::vector<double>& state, const std::vector<double>& action, double reward,
           const std::vector<double>& next_state, bool done);

  // batch distinct indices, uniformly (Floyd's algorithm).
  Batch sample(std::size_t batch, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& indices) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }

  // Binary snapshot of the contents (native byte order). read() requires
  // matching dimensions and throws IoError on a truncated or foreign stream.
  void write(std::ostream& os) const;
  void read(std::istream& is);

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<float> states_;
  std::vector<float> next_states_;
  std::vector<float> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> done_;
};

}  // namespace semshare
