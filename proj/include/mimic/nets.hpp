#pragma once

// Small tanh MLPs with hand-written backprop, plus Adam.

#include <cstddef>
#include <span>
#include <vector>

#include "mimic/core.hpp"
#include "mimic/serialization.hpp"

namespace mimic {

enum class Head { Identity, LogSoftmax };

inline const std::vector<std::size_t> kDefaultHidden = {32, 32};

/// Gradient accumulator laid out exactly like Mlp::params().
struct GradBuffer {
  std::vector<double> values;

  explicit GradBuffer(std::size_t n = 0) : values(n, 0.0) {}
  void zero() { std::fill(values.begin(), values.end(), 0.0); }
  void scale(double s) {
    for (double& v : values) v *= s;
  }
  std::size_t size() const { return values.size(); }
};

/// Fully connected network. Parameters live in one flat buffer, layer by layer:
/// row-major weights (out x in) followed by biases.
class Mlp {
 public:
  Mlp() = default;
  /// All-zero parameters.
  Mlp(std::vector<std::size_t> widths, Head head);
  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(std::vector<std::size_t> widths, Head head, Rng& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  Head head() const { return head_; }
  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> biases(std::size_t layer) const;

  Vector forward(std::span<const double> input) const;

  /// Adds d(loss)/d(params) into grads, given d(loss)/d(output). Recomputes the
  /// forward pass internally.
  void backward(std::span<const double> input, std::span<const double> output_grad,
                GradBuffer& grads) const;
  GradBuffer backward(std::span<const double> input, std::span<const double> output_grad) const;

  GradBuffer make_grad() const { return GradBuffer(params_.size()); }

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }
  void check_input(std::span<const double> input) const;
  // Activations per layer: acts[0] = input, acts[L] = pre-head output.
  void forward_all(std::span<const double> input, std::vector<Vector>& acts) const;

  std::vector<std::size_t> widths_;
  Head head_ = Head::Identity;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Numerically stable log-softmax (max-subtracted).
Vector log_softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> values);
/// log(1 + exp(x)) without overflow.
double softplus(double x);
double sigmoid(double x);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config)
      : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

  const AdamConfig& config() const { return config_; }
  std::size_t step_count() const { return t_; }

 private:
  friend void adam_step(AdamState&, std::span<double>, std::span<const double>);
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Bias-corrected Adam update in place. Throws on shape mismatch or non-finite gradient.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Rescales grads so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

Json to_json(const Mlp& net);
Mlp mlp_from_json(const Json& record);

}  // namespace mimic
