#include "nlsf/nn.hpp"

#include <cmath>

namespace nlsf::nn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Identity:
      return z;
  }
  return z;
}

Matrix activate_backward(Activation a, const Matrix& z, const Matrix& g) {
  switch (a) {
    case Activation::ReLU:
      return (z.array() > 0.0).select(g, 0.0);
    case Activation::Tanh:
      return (g.array() * (1.0 - z.array().tanh().square())).matrix();
    case Activation::Identity:
      return g;
  }
  return g;
}

Mlp::Mlp(const MlpSpec& spec, std::mt19937_64& rng) : spec_(spec) {
  if (spec.sizes.size() < 2) throw InvalidArgument("an MLP needs at least input and output sizes");
  for (int s : spec.sizes) {
    if (s < 1) throw InvalidArgument("MLP layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    const int fan_in = spec.sizes[l];
    const int fan_out = spec.sizes[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    W_.push_back(std::move(w));
    b_.push_back(Matrix::Zero(1, fan_out));
  }
}

Matrix Mlp::forward(const Matrix& x, MlpTape* tape) const {
  if (x.cols() != in_dim()) {
    throw DimensionError("MLP input has width " + std::to_string(x.cols()) + ", expected " + std::to_string(in_dim()));
  }
  if (tape) {
    tape->owner = this;
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix h = x;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    Matrix z = h * W_[l];
    z.rowwise() += b_[l].row(0);
    const Activation a = l + 1 == W_.size() ? spec_.output : spec_.hidden;
    if (tape) {
      tape->inputs.push_back(h);
      tape->pre.push_back(z);
    }
    h = activate(a, z);
  }
  return h;
}

Matrix Mlp::backward(const MlpTape& tape, const Matrix& grad_out, std::vector<Matrix>& grads) const {
  if (tape.owner != this || tape.inputs.size() != W_.size()) throw InvalidArgument("stale MLP tape");
  grads.assign(2 * W_.size(), Matrix());
  Matrix g = grad_out;
  for (std::size_t l = W_.size(); l-- > 0;) {
    if (tape.pre[l].rows() != g.rows() || tape.pre[l].cols() != g.cols()) throw InvalidArgument("stale MLP tape");
    const Activation a = l + 1 == W_.size() ? spec_.output : spec_.hidden;
    const Matrix gz = activate_backward(a, tape.pre[l], g);
    grads[2 * l] = tape.inputs[l].transpose() * gz;
    grads[2 * l + 1] = gz.colwise().sum();
    g = gz * W_[l].transpose();
  }
  return g;
}

void Mlp::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t l = 0; l < W_.size(); ++l) {
    out.push_back({prefix + ".W" + std::to_string(l), &W_[l], true});
    out.push_back({prefix + ".b" + std::to_string(l), &b_[l], false});
  }
}

Matrix softmax(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    const double lse = m + std::log((out.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& targets, const std::vector<Eigen::Index>& rows) {
  std::vector<Eigen::Index> use = rows;
  if (use.empty()) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) use.push_back(i);
  }
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) throw DimensionError("target count mismatch");
  LossGrad out;
  out.grad = Matrix::Zero(logits.rows(), logits.cols());
  const Matrix lsm = log_softmax(logits);
  const double scale = 1.0 / static_cast<double>(use.size());
  for (Eigen::Index i : use) {
    const int t = targets[i];
    if (t < 0 || t >= logits.cols()) throw InvalidArgument("target class out of range");
    out.loss -= scale * lsm(i, t);
    out.grad.row(i) = scale * lsm.row(i).array().exp().matrix();
    out.grad(i, t) -= scale;
  }
  return out;
}

LossGrad mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw DimensionError("mse shape mismatch");
  LossGrad out;
  const Matrix diff = pred - target;
  const double scale = 1.0 / static_cast<double>(pred.size());
  out.loss = scale * diff.squaredNorm();
  out.grad = 2.0 * scale * diff;
  return out;
}

void adam_step(AdamState& st, const std::vector<ParamRef>& params, const std::vector<Matrix>& grads) {
  if (grads.size() != params.size()) throw DimensionError("adam_step: gradient count mismatch");
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      st.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (st.m.size() != params.size()) throw DimensionError("adam_step: optimizer state does not match parameters");
  ++st.step;
  const auto& c = st.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k].value;
    const Matrix& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw DimensionError("adam_step: gradient shape mismatch for " + params[k].name);
    }
    st.m[k] = c.beta1 * st.m[k] + (1.0 - c.beta1) * g;
    st.v[k] = c.beta2 * st.v[k] + (1.0 - c.beta2) * g.cwiseProduct(g);
    if (params[k].decay && c.weight_decay > 0.0) p *= 1.0 - c.lr * c.weight_decay;
    p.array() -= c.lr * (st.m[k].array() / bc1) / ((st.v[k].array() / bc2).sqrt() + c.eps);
  }
}

double gradcheck(const std::function<double()>& loss, const std::vector<ParamRef>& params,
                 const std::vector<Matrix>& analytic, double h) {
  if (analytic.size() != params.size()) throw DimensionError("gradcheck: gradient count mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k].value;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p.data()[i];
      p.data()[i] = keep + h;
      const double up = loss();
      p.data()[i] = keep - h;
      const double down = loss();
      p.data()[i] = keep;
      const double num = (up - down) / (2.0 * h);
      const double ana = analytic[k].data()[i];
      const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-5});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::vector<Matrix> zeros_like(const std::vector<ParamRef>& params) {
  std::vector<Matrix> out;
  for (const auto& p : params) out.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
  return out;
}

}  // namespace nlsf::nn
