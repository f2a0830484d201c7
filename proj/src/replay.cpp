#include "semshare/replay.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "semshare/errors.hpp"

namespace semshare {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) throw ConfigError("replay: capacity must be >= 1");
}

void ReplayBuffer::add(const double* state, const double* action, double reward, const double* next_state,
                       bool done) {
  const std::size_t slot = head_;
  if (slot == rewards_.size()) {
    states_.resize(states_.size() + obs_dim_);
    next_states_.resize(next_states_.size() + obs_dim_);
    actions_.resize(actions_.size() + act_dim_);
    rewards_.push_back(0.0);
    done_.push_back(0);
  }
  std::copy(state, state + obs_dim_, states_.begin() + slot * obs_dim_);
  std::copy(next_state, next_state + obs_dim_, next_states_.begin() + slot * obs_dim_);
  std::copy(action, action + act_dim_, actions_.begin() + slot * act_dim_);
  rewards_[slot] = reward;
  done_[slot] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

void ReplayBuffer::add(const std::vector<double>& state, const std::vector<double>& action, double reward,
                       const std::vector<double>& next_state, bool done) {
  if (state.size() != obs_dim_ || next_state.size() != obs_dim_ || action.size() != act_dim_) {
    throw UsageError("replay: transition shape mismatch");
  }
  add(state.data(), action.data(), reward, next_state.data(), done);
}

Batch ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch == 0 || batch > size_) {
    throw UsageError("replay: cannot draw " + std::to_string(batch) + " of " + std::to_string(size_));
  }
  std::vector<std::size_t> idx;
  idx.reserve(batch);
  for (std::size_t j = size_ - batch; j < size_; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(idx.begin(), idx.end(), t) == idx.end()) {
      idx.push_back(t);
    } else {
      idx.push_back(j);
    }
  }
  return gather(idx);
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& indices) const {
  Batch b;
  b.size = indices.size();
  b.obs_dim = obs_dim_;
  b.act_dim = act_dim_;
  b.indices = indices;
  b.states.resize(b.size * obs_dim_);
  b.next_states.resize(b.size * obs_dim_);
  b.actions.resize(b.size * act_dim_);
  b.rewards.resize(b.size);
  b.done.resize(b.size);
  for (std::size_t r = 0; r < b.size; ++r) {
    const std::size_t i = indices[r];
    if (i >= size_) throw UsageError("replay: index out of range");
    std::copy_n(states_.begin() + i * obs_dim_, obs_dim_, b.states.begin() + r * obs_dim_);
    std::copy_n(next_states_.begin() + i * obs_dim_, obs_dim_, b.next_states.begin() + r * obs_dim_);
    std::copy_n(actions_.begin() + i * act_dim_, act_dim_, b.actions.begin() + r * act_dim_);
    b.rewards[r] = rewards_[i];
    b.done[r] = done_[i] ? 1.0 : 0.0;
  }
  return b;
}

namespace {

constexpr char kMagic[8] = {'S', 'S', 'R', 'E', 'P', 'L', 'Y', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("replay: truncated stream");
  return v;
}

template <class T>
void get_vec(std::istream& is, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw IoError("replay: truncated stream");
  }
}

}  // namespace

void ReplayBuffer::write(std::ostream& os) const {
  os.write(kMagic, sizeof kMagic);
  for (std::uint64_t v : {capacity_, obs_dim_, act_dim_, size_, head_, rewards_.size()}) put(os, v);
  put_vec(os, states_);
  put_vec(os, next_states_);
  put_vec(os, actions_);
  put_vec(os, rewards_);
  put_vec(os, done_);
  if (!os) throw IoError("replay: write failed");
}

void ReplayBuffer::read(std::istream& is) {
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("replay: not a replay snapshot");
  }
  const auto cap = get<std::uint64_t>(is);
  const auto od = get<std::uint64_t>(is);
  const auto ad = get<std::uint64_t>(is);
  if (cap != capacity_ || od != obs_dim_ || ad != act_dim_) {
    throw ConfigError("replay: snapshot dimensions do not match the agent");
  }
  const auto size = get<std::uint64_t>(is);
  const auto head = get<std::uint64_t>(is);
  const auto stored = get<std::uint64_t>(is);
  if (size > cap || stored > cap || head >= cap || size != stored) throw IoError("replay: inconsistent header");
  get_vec(is, states_, stored * obs_dim_);
  get_vec(is, next_states_, stored * obs_dim_);
  get_vec(is, actions_, stored * act_dim_);
  get_vec(is, rewards_, stored);
  get_vec(is, done_, stored);
  size_ = size;
  head_ = head;
}

}  // namespace semshare
