#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nlsf/error.hpp"
#include "nlsf/graph.hpp"

namespace nlsf::nn {

enum class Activation { ReLU, Tanh, Identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

Matrix activate(Activation a, const Matrix& z);
/// Derivative evaluated at pre-activation z, times upstream gradient g.
Matrix activate_backward(Activation a, const Matrix& z, const Matrix& g);

/// A trainable tensor; biases are excluded from weight decay.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  bool decay = true;
};

struct MlpSpec {
  std::vector<int> sizes;  // input, hidden..., output
  Activation hidden = Activation::ReLU;
  Activation output = Activation::Identity;
};

struct MlpTape {
  const void* owner = nullptr;
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

/// Dense feed-forward network acting on the rows of its input.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, std::mt19937_64& rng);

  const MlpSpec& spec() const { return spec_; }
  int in_dim() const { return spec_.sizes.front(); }
  int out_dim() const { return spec_.sizes.back(); }
  std::size_t num_layers() const { return W_.size(); }
  Matrix& weight(std::size_t l) { return W_.at(l); }
  Matrix& bias(std::size_t l) { return b_.at(l); }
  const Matrix& weight(std::size_t l) const { return W_.at(l); }
  const Matrix& bias(std::size_t l) const { return b_.at(l); }

  Matrix forward(const Matrix& x, MlpTape* tape = nullptr) const;
  /// Parameter gradients in collect() order (W0, b0, W1, b1, ...) and the
  /// gradient with respect to the input.
  Matrix backward(const MlpTape& tape, const Matrix& grad_out, std::vector<Matrix>& grads) const;
  void collect(const std::string& prefix, std::vector<ParamRef>& out);

 private:
  MlpSpec spec_;
  std::vector<Matrix> W_;  // in x out
  std::vector<Matrix> b_;  // 1 x out
};

/// Row-wise softmax / log-softmax with max subtraction.
Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Mean cross-entropy over the rows listed in `rows` (all rows when empty).
LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& targets, const std::vector<Eigen::Index>& rows = {});
LossGrad mse(const Matrix& pred, const Matrix& target);

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// Adam with bias correction; weight decay is decoupled and applied only to
/// parameters with decay = true.
void adam_step(AdamState& state, const std::vector<ParamRef>& params, const std::vector<Matrix>& grads);

/// Largest |a - n| / max(|a|, |n|, 1e-5) between analytic gradients and
/// central differences of `loss` with step h.
double gradcheck(const std::function<double()>& loss, const std::vector<ParamRef>& params,
                 const std::vector<Matrix>& analytic, double h = 1e-5);

std::vector<Matrix> zeros_like(const std::vector<ParamRef>& params);

}  // namespace nlsf::nn
