#include "mimic/nets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mimic {

Mlp::Mlp(std::vector<std::size_t> widths, Head head) : widths_(std::move(widths)), head_(head) {
  if (widths_.size() < 2) throw Error("Mlp needs at least input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw Error("Mlp widths must be positive");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::glorot(std::vector<std::size_t> widths, Head head, Rng& rng) {
  Mlp net(std::move(widths), head);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double fan_in = static_cast<double>(net.widths_[l]);
    const double fan_out = static_cast<double>(net.widths_[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t n = net.widths_[l] * net.widths_[l + 1];
    double* w = net.params_.data() + net.weight_offset(l);
    for (std::size_t i = 0; i < n; ++i) w[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return net;
}

std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), widths_[layer] * widths_[layer + 1]};
}

std::span<const double> Mlp::biases(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), widths_[layer + 1]};
}

void Mlp::check_input(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw Error("Mlp input has dimension " + std::to_string(input.size()) + ", expected " +
                std::to_string(input_dim()));
  }
}

void Mlp::forward_all(std::span<const double> input, std::vector<Vector>& acts) const {
  const std::size_t L = layer_count();
  acts.resize(L + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* W = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const Vector& x = acts[l];
    Vector& y = acts[l + 1];
    y.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * x[i];
      y[o] = (l + 1 < L) ? std::tanh(sum) : sum;
    }
  }
}

Vector Mlp::forward(std::span<const double> input) const {
  check_input(input);
  std::vector<Vector> acts;
  forward_all(input, acts);
  if (head_ == Head::LogSoftmax) return log_softmax(acts.back());
  return std::move(acts.back());
}

void Mlp::backward(std::span<const double> input, std::span<const double> output_grad,
                   GradBuffer& grads) const {
  check_input(input);
  if (output_grad.size() != output_dim()) throw Error("Mlp output gradient has wrong dimension");
  if (grads.size() != params_.size()) throw Error("GradBuffer does not match network shape");
  std::vector<Vector> acts;
  forward_all(input, acts);
  const std::size_t L = layer_count();

  // delta = d(loss)/d(pre-activation) of the current layer.
  Vector delta(output_grad.begin(), output_grad.end());
  if (head_ == Head::LogSoftmax) {
    const Vector logp = log_softmax(acts.back());
    double g_sum = 0.0;
    for (double g : output_grad) g_sum += g;
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] -= std::exp(logp[k]) * g_sum;
  }
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* W = params_.data() + weight_offset(l);
    double* gW = grads.values.data() + weight_offset(l);
    double* gb = grads.values.data() + bias_offset(l);
    const Vector& x = acts[l];
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = gW + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * x[i];
    }
    if (l == 0) break;
    Vector prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    // x = tanh(pre) for hidden layers
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
    delta = std::move(prev);
  }
}

GradBuffer Mlp::backward(std::span<const double> input,
                         std::span<const double> output_grad) const {
  GradBuffer grads = make_grad();
  backward(input, output_grad, grads);
  return grads;
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

Vector log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  Vector out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw Error("adam_step: shape mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error("adam_step: non-finite gradient");
  }
  const AdamConfig& c = state.config_;
  ++state.t_;
  const double t = static_cast<double>(state.t_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m_[i] = c.beta1 * state.m_[i] + (1.0 - c.beta1) * grads[i];
    state.v_[i] = c.beta2 * state.v_[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double m_hat = state.m_[i] / bc1;
    const double v_hat = state.v_[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

Json to_json(const Mlp& net) {
  Json record;
  record["v"] = kFormatVersion;
  record["widths"] = net.widths();
  record["head"] = net.head() == Head::LogSoftmax ? "log_softmax" : "identity";
  Json weights = Json::array();
  Json biases = Json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto w = net.weights(l);
    auto b = net.biases(l);
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    biases.push_back(std::vector<double>(b.begin(), b.end()));
  }
  record["weights"] = std::move(weights);
  record["biases"] = std::move(biases);
  return record;
}

Mlp mlp_from_json(const Json& record) {
  if (record.value("v", 0) != kFormatVersion) throw Error("unsupported checkpoint version");
  const std::string head = record.value("head", "identity");
  Mlp net(record.at("widths").get<std::vector<std::size_t>>(),
          head == "log_softmax" ? Head::LogSoftmax : Head::Identity);
  const Json& weights = record.at("weights");
  const Json& biases = record.at("biases");
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) {
    throw Error("checkpoint layer count does not match widths");
  }
  auto params = net.params();
  std::size_t pos = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    if (w.size() != net.weights(l).size() || b.size() != net.biases(l).size()) {
      throw Error("checkpoint layer " + std::to_string(l) + " has wrong shape");
    }
    std::copy(w.begin(), w.end(), params.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += w.size();
    std::copy(b.begin(), b.end(), params.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += b.size();
  }
  return net;
}

}  // namespace mimic
