#include "semshare/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "semshare/errors.hpp"
#include "semshare/kernels.hpp"

namespace semshare {

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw UsageError("DenseNet: need at least input and output sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw UsageError("DenseNet: zero-width layer");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += sizes_[l] * sizes_[l + 1];
    b_off_.push_back(off);
    off += sizes_[l + 1];
  }
  params_.assign(off, 0.0);
}

void DenseNet::init(Rng& rng, double final_scale) {
  for (std::size_t l = 0; l < layers(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    if (l + 1 == layers() && final_scale > 0) bound = final_scale;
    const std::size_t n = sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    double* p = params_.data() + w_off_[l];
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
  }
}

void DenseNet::forward(const double* x, std::size_t batch, Tape& tape) const {
  if (sizes_.empty()) throw UsageError("DenseNet: uninitialised network");
  tape.batch = batch;
  tape.acts.resize(sizes_.size());
  tape.acts[0].assign(x, x + batch * sizes_[0]);
  for (std::size_t l = 0; l < layers(); ++l) {
    auto& y = tape.acts[l + 1];
    y.resize(batch * sizes_[l + 1]);
    kernels::dense_forward(tape.acts[l].data(), weights(l), bias(l), y.data(), batch, sizes_[l], sizes_[l + 1]);
    if (l + 1 < layers()) kernels::relu_forward(y.data(), y.size());
  }
}

void DenseNet::forward(const std::vector<double>& x, std::size_t batch, Tape& tape) const {
  if (x.size() != batch * in_dim()) {
    throw UsageError("DenseNet: input has " + std::to_string(x.size()) + " values, expected " +
                     std::to_string(batch * in_dim()));
  }
  forward(x.data(), batch, tape);
}

std::vector<double> DenseNet::predict(const std::vector<double>& x, std::size_t batch) const {
  Tape t;
  forward(x, batch, t);
  return t.acts.back();
}

void DenseNet::backward(const Tape& tape, const std::vector<double>& dy, double* grad, double* dx) const {
  const std::size_t batch = tape.batch;
  if (tape.acts.size() != sizes_.size() || dy.size() != batch * out_dim()) {
    throw UsageError("DenseNet::backward: tape or gradient shape mismatch");
  }
  std::vector<double> cur = dy;
  std::vector<double> prev;
  for (std::size_t l = layers(); l-- > 0;) {
    if (l + 1 < layers()) kernels::relu_backward(tape.acts[l + 1].data(), cur.data(), cur.size());
    if (grad) {
      kernels::dense_backward_params(tape.acts[l].data(), cur.data(), grad + w_off_[l], grad + b_off_[l], batch,
                                     sizes_[l], sizes_[l + 1]);
    }
    if (l == 0 && !dx) break;
    prev.resize(batch * sizes_[l]);
    kernels::dense_backward_input(cur.data(), weights(l), prev.data(), batch, sizes_[l], sizes_[l + 1]);
    std::swap(cur, prev);
  }
  if (dx) std::copy(cur.begin(), cur.end(), dx);
}

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::apply(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw UsageError("Adam: size mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericalError("Adam: non-finite gradient");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.lr;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double eps = cfg_.eps;
  const std::size_t n = params.size();
  double* __restrict p = params.data();
  double* __restrict m = m_.data();
  double* __restrict v = v_.data();
  const double* __restrict gr = grads.data();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gr[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void to_json(nlohmann::json& j, const Adam& a) {
  j = nlohmann::json{{"lr", a.cfg_.lr}, {"beta1", a.cfg_.beta1}, {"beta2", a.cfg_.beta2}, {"eps", a.cfg_.eps},
                     {"t", a.t_},       {"m", a.m_},              {"v", a.v_}};
}

void from_json(const nlohmann::json& j, Adam& a) {
  a.cfg_.lr = j.at("lr").get<double>();
  a.cfg_.beta1 = j.at("beta1").get<double>();
  a.cfg_.beta2 = j.at("beta2").get<double>();
  a.cfg_.eps = j.at("eps").get<double>();
  a.t_ = j.at("t").get<std::size_t>();
  a.m_ = j.at("m").get<std::vector<double>>();
  a.v_ = j.at("v").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const DenseNet& net) {
  j = nlohmann::json{{"layer_sizes", net.layer_sizes()}, {"params", net.params()}};
}

void from_json(const nlohmann::json& j, DenseNet& net) {
  DenseNet fresh(j.at("layer_sizes").get<std::vector<std::size_t>>());
  auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != fresh.param_count()) {
    throw ConfigError("checkpoint: params has " + std::to_string(p.size()) + " values, layer_sizes imply " +
                      std::to_string(fresh.param_count()));
  }
  fresh.params() = std::move(p);
  net = std::move(fresh);
}

namespace {
constexpr double kActionBound = 1.0 - 1e-12;
}  // namespace

double log1m_tanh_sq(double u) {
  // 1 - tanh^2 u = 4 / (e^u + e^-u)^2
  const double a = -2.0 * u;
  const double softplus = a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
  return 2.0 * (std::numbers::ln2 - u - softplus);
}

SquashedGaussian SquashedGaussian::with_noise(const std::vector<double>& head, std::size_t batch, std::size_t dim,
                                              std::vector<double> z) {
  if (head.size() != batch * 2 * dim || z.size() != batch * dim) {
    throw UsageError("SquashedGaussian: shape mismatch");
  }
  SquashedGaussian g;
  g.batch = batch;
  g.dim = dim;
  g.z = std::move(z);
  g.mean.resize(batch * dim);
  g.log_std.resize(batch * dim);
  g.clamped.resize(batch * dim);
  g.action.resize(batch * dim);
  g.log_prob.assign(batch, 0.0);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t b = 0; b < batch; ++b) {
    double lp = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const std::size_t k = b * dim + i;
      const double mu = head[b * 2 * dim + i];
      const double raw = head[b * 2 * dim + dim + i];
      const double ls = std::clamp(raw, log_std_min, log_std_max);
      g.mean[k] = mu;
      g.log_std[k] = ls;
      g.clamped[k] = raw < log_std_min || raw > log_std_max;
      const double u = mu + std::exp(ls) * g.z[k];
      // Keep the action strictly inside (-1, 1) even when tanh saturates.
      g.action[k] = std::clamp(std::tanh(u), -kActionBound, kActionBound);
      lp += -0.5 * g.z[k] * g.z[k] - ls - half_log_2pi - log1m_tanh_sq(u);
    }
    g.log_prob[b] = lp;
  }
  return g;
}

SquashedGaussian SquashedGaussian::sample(const std::vector<double>& head, std::size_t batch, std::size_t dim,
                                          Rng& rng) {
  std::vector<double> z(batch * dim);
  for (double& v : z) v = rng.normal();
  return with_noise(head, batch, dim, std::move(z));
}

std::vector<double> SquashedGaussian::backward(const std::vector<double>& dl_da,
                                               const std::vector<double>& dl_dlogp) const {
  if (dl_da.size() != batch * dim || dl_dlogp.size() != batch) {
    throw UsageError("SquashedGaussian::backward: shape mismatch");
  }
  std::vector<double> dhead(batch * 2 * dim, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < dim; ++i) {
      const std::size_t k = b * dim + i;
      const double a = action[k];
      const double sd = std::exp(log_std[k]);
      // d logp / du = 2a (from the squash correction), d a / du = 1 - a^2.
      const double du = dl_da[k] * (1.0 - a * a) + dl_dlogp[b] * 2.0 * a;
      dhead[b * 2 * dim + i] = du;
      // u = mu + sd z, and logp carries -log sd directly.
      const double dls = du * sd * z[k] - dl_dlogp[b];
      dhead[b * 2 * dim + dim + i] = clamped[k] ? 0.0 : dls;
    }
  }
  return dhead;
}

std::vector<double> squashed_mean(const std::vector<double>& head, std::size_t batch, std::size_t dim) {
  if (head.size() != batch * 2 * dim) throw UsageError("squashed_mean: shape mismatch");
  std::vector<double> a(batch * dim);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < dim; ++i) {
      a[b * dim + i] = std::clamp(std::tanh(head[b * 2 * dim + i]), -kActionBound, kActionBound);
    }
  }
  return a;
}

}  // namespace semshare
