#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "semshare/rng.hpp"

namespace semshare {

// Activations recorded by a forward pass, consumed by backward().
struct Tape {
  std::size_t batch = 0;
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l] = output of layer l

  const std::vector<double>& output() const { return acts.back(); }
};

// Fully connected network, rectifier on hidden layers, linear output.
// Parameters live in one flat vector: W0 (in x out), b0, W1, b1, ...
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<std::size_t> layer_sizes);

  // Uniform fan-in init: weights and biases of layer l in +-1/sqrt(fan_in);
  // the output layer uses +-final_scale when final_scale > 0.
  void init(Rng& rng, double final_scale = 3e-3);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t in_dim() const { return sizes_.front(); }
  std::size_t out_dim() const { return sizes_.back(); }
  std::size_t layers() const { return sizes_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double* weights(std::size_t layer) { return params_.data() + w_off_[layer]; }
  const double* weights(std::size_t layer) const { return params_.data() + w_off_[layer]; }
  double* bias(std::size_t layer) { return params_.data() + b_off_[layer]; }
  const double* bias(std::size_t layer) const { return params_.data() + b_off_[layer]; }
  std::size_t weight_offset(std::size_t layer) const { return w_off_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return b_off_[layer]; }

  // x holds batch rows of in_dim(). Throws UsageError on a size mismatch.
  void forward(const double* x, std::size_t batch, Tape& tape) const;
  void forward(const std::vector<double>& x, std::size_t batch, Tape& tape) const;
  std::vector<double> predict(const std::vector<double>& x, std::size_t batch) const;

  // Reverse pass for the loss whose output gradient is dy (batch x out_dim).
  // Adds parameter gradients into grad (param_count(), may be null) and
  // writes input gradients into dx (batch x in_dim(), may be null).
  void backward(const Tape& tape, const std::vector<double>& dy, double* grad, double* dx) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_off_;
  std::vector<std::size_t> b_off_;
  std::vector<double> params_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig cfg = {});

  // Descends along grads. Throws NumericalError on a non-finite gradient.
  void apply(std::vector<double>& params, const std::vector<double>& grads);

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  std::size_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

  friend void to_json(nlohmann::json& j, const Adam& a);
  friend void from_json(const nlohmann::json& j, Adam& a);

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

void to_json(nlohmann::json& j, const DenseNet& net);
void from_json(const nlohmann::json& j, DenseNet& net);

// Squashed Gaussian head. The network emits 2d values per sample: d means,
// then d raw log standard deviations (clamped to [log_std_min, log_std_max]).
struct SquashedGaussian {
  static constexpr double log_std_min = -20.0;
  static constexpr double log_std_max = 2.0;

  std::size_t batch = 0;
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> log_std;    // after clamping
  std::vector<bool> clamped;      // log-std gradient is zero where clamped
  std::vector<double> z;          // standard normal noise
  std::vector<double> action;     // tanh(mean + std * z)
  std::vector<double> log_prob;   // per sample

  // Reads the head output and draws z from rng (row by row).
  static SquashedGaussian sample(const std::vector<double>& head, std::size_t batch, std::size_t dim, Rng& rng);
  // Same with caller-provided noise (batch x dim).
  static SquashedGaussian with_noise(const std::vector<double>& head, std::size_t batch, std::size_t dim,
                                     std::vector<double> z);

  // Gradient w.r.t. the head output of L = sum_b sum_i dl_da[b,i] a[b,i]
  // + sum_b dl_dlogp[b] logp[b], i.e. the chain rule through the
  // reparameterized sample.
  std::vector<double> backward(const std::vector<double>& dl_da, const std::vector<double>& dl_dlogp) const;
};

// tanh(mean) per action dimension, the deterministic action.
std::vector<double> squashed_mean(const std::vector<double>& head, std::size_t batch, std::size_t dim);

// log(1 - tanh(u)^2) computed without cancellation.
double log1m_tanh_sq(double u);

}  // namespace semshare
