#include "nlsf/model.hpp"

#include <cmath>
#include <string>

#include "nlsf/basis_cache.hpp"
#include "nlsf/verify.hpp"

namespace nlsf {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full:
      return "full";
    case Variant::Diag:
      return "diag";
    case Variant::LeadingFull:
      return "leading_full";
    case Variant::LeadingDiag:
      return "leading_diag";
  }
  return "?";
}

const char* to_string(Task t) {
  switch (t) {
    case Task::Node:
      return "node";
    case Task::GraphLevel:
      return "graph";
    case Task::Pooling:
      return "pooling";
  }
  return "?";
}

const char* to_string(Readout r) {
  switch (r) {
    case Readout::Mean:
      return "mean";
    case Readout::Sum:
      return "sum";
    case Readout::Max:
      return "max";
    case Readout::LpNorm:
      return "lp";
  }
  return "?";
}

void NlsfConfig::validate() const {
  if (branches.empty() || branches.size() > 2) throw ConfigError("model needs one branch, or two for attention");
  for (const auto& b : branches) {
    if (b.mode == SpectralMode::Index && b.J < 1) throw ConfigError("index branch needs J >= 1");
    if (b.mode == SpectralMode::Value) {
      try {
        b.bank.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("bank: ") + e.what());
      }
    }
    if (b.lambda_max < 0.0) throw ConfigError("lambda_max must be nonnegative");
  }
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (in_dim < 1) throw ConfigError("in_dim must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (d_tilde < 0 || full_width < 0 || hidden_width < 0) throw ConfigError("widths must be nonnegative");
  if (!(readout_p >= 1.0)) throw ConfigError("readout p must be >= 1");
  if (!(norm.p >= 1.0)) throw ConfigError("signal norm p must be >= 1");
  try {
    stability.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("stability: ") + e.what());
  }
  for (int h : psi_hidden)
    if (h < 1) throw ConfigError("psi hidden sizes must be positive");
  for (int h : head_hidden)
    if (h < 1) throw ConfigError("head hidden sizes must be positive");
}

// ---------------------------------------------------------------------------
// Context

eig::SpectralBasis compute_basis(const BranchSpec& branch, const SparseSymMatrix& delta, const ContextOptions& opt) {
  const Eigen::Index n = delta.size();
  if (n <= opt.dense_limit) return eig::dense_eig(delta, 1e-8, opt.dense_limit);

  Eigen::Index pairs = branch.mode == SpectralMode::Index ? branch.J + 8 : 32;
  while (true) {
    pairs = std::min(pairs, n);
    eig::EigConfig cfg;
    cfg.num_pairs = static_cast<int>(pairs);
    cfg.seed = opt.seed;
    cfg.max_iter = 200;
    eig::SpectralBasis basis = eig::lanczos_smallest(delta, cfg);
    bool covered = basis.complete;
    if (!covered && branch.mode == SpectralMode::Index) {
      covered = basis.num_groups() > static_cast<std::size_t>(branch.J);
    } else if (!covered) {
      const FilterBank bank =
          make_bank(branch.bank, branch.lambda_max > 0.0 ? branch.lambda_max : basis.lambda_max);
      covered = true;
      for (int j = 0; j < bank.K(); ++j) covered = covered && band_covered(basis, bank, j);
    }
    if (covered) return basis;
    if (pairs == n) throw CoverageError("could not cover the requested spectrum");
    pairs *= 2;
  }
}

Frame make_frame(const BranchSpec& branch, const eig::SpectralBasis& basis, bool leading) {
  if (branch.mode == SpectralMode::Index) return Frame::index(basis, branch.J, leading);
  const double top = branch.lambda_max > 0.0 ? branch.lambda_max : basis.lambda_max;
  return Frame::value(basis, make_bank(branch.bank, top), leading);
}

GraphContext prepare_context(const NlsfConfig& cfg, const GraphSignal& g, const ContextOptions& opt) {
  GraphContext ctx;
  ctx.n = g.num_nodes();
  for (const auto& branch : cfg.branches) {
    const SparseSymMatrix delta = build_laplacian(g, branch.gso);
    eig::SpectralBasis basis;
    if (opt.cache_dir) {
      const eig::BasisCache cache(*opt.cache_dir);
      const std::string tag = std::string(to_string(branch.gso)) +
                              (ctx.n <= opt.dense_limit ? "_dense" : "_partial_" + std::to_string(opt.seed));
      basis = cache.get_or_compute(delta, tag, [&] { return compute_basis(branch, delta, opt); });
    } else {
      basis = compute_basis(branch, delta, opt);
    }
    ctx.frames.push_back(make_frame(branch, basis, is_leading(cfg.variant)));
    ctx.bases.push_back(std::move(basis));
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Readout

Matrix readout(Readout kind, double p, const Matrix& z) {
  const double n = static_cast<double>(z.rows());
  switch (kind) {
    case Readout::Mean:
      return z.colwise().mean();
    case Readout::Sum:
      return z.colwise().sum();
    case Readout::Max:
      return z.colwise().maxCoeff();
    case Readout::LpNorm: {
      Matrix out(1, z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        out(0, c) = p == 1.0 ? z.col(c).cwiseAbs().sum() / n
                             : std::pow(z.col(c).cwiseAbs().array().pow(p).sum() / n, 1.0 / p);
      }
      return out;
    }
  }
  return {};
}

Matrix readout_backward(Readout kind, double p, const Matrix& z, const Matrix& grad) {
  const double n = static_cast<double>(z.rows());
  Matrix g = Matrix::Zero(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    switch (kind) {
      case Readout::Mean:
        g.col(c).setConstant(grad(0, c) / n);
        break;
      case Readout::Sum:
        g.col(c).setConstant(grad(0, c));
        break;
      case Readout::Max: {
        Eigen::Index at = 0;
        z.col(c).maxCoeff(&at);
        g(at, c) = grad(0, c);
        break;
      }
      case Readout::LpNorm: {
        if (p == 1.0) {
          g.col(c) = grad(0, c) * z.col(c).cwiseSign() / n;
          break;
        }
        const double y = std::pow(z.col(c).cwiseAbs().array().pow(p).sum() / n, 1.0 / p);
        if (y == 0.0) break;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          const double v = z(i, c);
          const double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
          g(i, c) = grad(0, c) * s * std::pow(std::abs(v) / y, p - 1.0) / n;
        }
        break;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Model

NlsfModel::NlsfModel(NlsfConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const auto glorot = [&](int rows, int cols) {
    const double s = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-s, s);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    return m;
  };

  if (cfg_.task != Task::GraphLevel) {
    psi_.resize(cfg_.branches.size());
    mix_.resize(cfg_.branches.size());
    for (int b = 0; b < num_branches(); ++b) {
      for (int l = 0; l < cfg_.layers; ++l) {
        const int w = layer_in_width(b, l);
        const int B = blocks(b);
        const int ow = layer_out_width(b, l);
        nn::MlpSpec spec;
        spec.sizes.push_back(B * w);
        for (int h : cfg_.psi_hidden) spec.sizes.push_back(h);
        const std::size_t out = is_diag(cfg_.variant) ? static_cast<std::size_t>(B) * w
                                                      : static_cast<std::size_t>(B) * w * ow;
        if (!is_diag(cfg_.variant) && out > cfg_.full_cap) {
          throw ConfigError("Full synthesis matrix needs " + std::to_string(out) + " entries (cap " +
                            std::to_string(cfg_.full_cap) + "); use the diag variant for this size");
        }
        spec.sizes.push_back(static_cast<int>(out));
        spec.hidden = cfg_.psi_activation;
        spec.output = nn::Activation::Identity;
        psi_[b].emplace_back(spec, rng);
        if (l + 1 < cfg_.layers && cfg_.hidden_width > 0) mix_[b].push_back(glorot(ow, cfg_.hidden_width));
      }
    }
    nn::MlpSpec head;
    head.sizes.push_back(trunk_width());
    for (int h : cfg_.head_hidden) head.sizes.push_back(h);
    head.sizes.push_back(cfg_.num_classes);
    head.hidden = cfg_.head_activation;
    head_ = nn::Mlp(head, rng);
  } else {
    nn::MlpSpec gp;
    gp.sizes.push_back(coeff_width());
    for (int h : cfg_.psi_hidden) gp.sizes.push_back(h);
    if (gp.sizes.size() == 1) gp.sizes.push_back(coeff_width());
    gp.hidden = cfg_.psi_activation;
    gp.output = cfg_.psi_activation;
    graph_psi_ = nn::Mlp(gp, rng);
    nn::MlpSpec head;
    head.sizes.push_back(graph_psi_.out_dim());
    for (int h : cfg_.head_hidden) head.sizes.push_back(h);
    head.sizes.push_back(cfg_.num_classes);
    head.hidden = cfg_.head_activation;
    head_ = nn::Mlp(head, rng);
  }
  if (cfg_.attention()) att_ = Matrix::Zero(1, 2);
}

int NlsfModel::blocks(int branch) const {
  const auto& b = cfg_.branches.at(branch);
  const int retained = b.mode == SpectralMode::Index ? b.J : b.bank.K;
  return retained + (is_leading(cfg_.variant) ? 0 : 1);
}

int NlsfModel::layer_in_width(int branch, int layer) const {
  if (layer == 0) return cfg_.in_dim;
  if (cfg_.hidden_width > 0) return cfg_.hidden_width;
  // Without a mix the next layer sees the previous output directly.
  return layer_out_width(branch, layer - 1);
}

int NlsfModel::layer_out_width(int branch, int layer) const {
  const int w = layer_in_width(branch, layer);
  if (is_diag(cfg_.variant)) return w;
  if (cfg_.full_width > 0) return cfg_.full_width;
  return blocks(branch) * (cfg_.d_tilde > 0 ? cfg_.d_tilde : w);
}

int NlsfModel::trunk_width() const {
  int w = 0;
  for (int b = 0; b < num_branches(); ++b) w += layer_out_width(b, cfg_.layers - 1);
  return w;
}

int NlsfModel::coeff_width() const {
  int w = 0;
  for (int b = 0; b < num_branches(); ++b) w += blocks(b) * cfg_.in_dim;
  return w;
}

Eigen::Vector2d NlsfModel::attention_weights() const {
  if (!cfg_.attention()) return {1.0, 0.0};
  const Matrix a = nn::softmax(att_);
  return {a(0, 0), a(0, 1)};
}

std::vector<nn::ParamRef> NlsfModel::params() {
  std::vector<nn::ParamRef> out;
  for (std::size_t b = 0; b < psi_.size(); ++b) {
    for (std::size_t l = 0; l < psi_[b].size(); ++l) {
      psi_[b][l].collect("psi" + std::to_string(b) + "." + std::to_string(l), out);
      if (l < mix_[b].size()) out.push_back({"mix" + std::to_string(b) + "." + std::to_string(l), &mix_[b][l], true});
    }
  }
  if (cfg_.task == Task::GraphLevel) graph_psi_.collect("gpsi", out);
  head_.collect("head", out);
  if (cfg_.attention()) out.push_back({"attention", &att_, false});
  return out;
}

Matrix NlsfModel::run_branch(int b, const Frame& frame, const Matrix& x, std::vector<LayerTape>* tape) const {
  if (frame.num_blocks() != blocks(b)) {
    throw DimensionError("graph context has " + std::to_string(frame.num_blocks()) + " blocks, model expects " +
                         std::to_string(blocks(b)));
  }
  Matrix cur = x;
  Matrix theta;
  for (int l = 0; l < cfg_.layers; ++l) {
    const Eigen::Index w = cur.cols();
    const int B = frame.num_blocks();
    const SpectralCoefficients c = analyze(frame, cur, cfg_.norm);
    const Matrix crow = c.values.transpose();
    LayerTape lt;
    const Matrix o = psi_[b][l].forward(crow, tape ? &lt.psi : nullptr);
    const Matrix h = normalized_blocks(frame, cur, cfg_.stability, cfg_.norm);
    if (is_diag(cfg_.variant)) {
      theta = Matrix::Zero(cur.rows(), w);
      for (int j = 0; j < B; ++j)
        for (Eigen::Index k = 0; k < w; ++k) theta.col(k) += o(0, j * w + k) * h.col(j * w + k);
    } else {
      const Eigen::Index ow = layer_out_width(b, l);
      const Matrix R = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          o.data(), B * w, ow);
      theta = h * R;
    }
    if (tape) {
      lt.x = cur;
      lt.coeff = crow;
      lt.psi_out = o;
      lt.h = h;
      lt.theta = theta;
      tape->push_back(std::move(lt));
    }
    if (l + 1 < cfg_.layers) cur = static_cast<std::size_t>(l) < mix_[b].size() ? Matrix(theta * mix_[b][l]) : theta;
  }
  return theta;
}

Matrix NlsfModel::combine(const std::vector<Matrix>& parts) const {
  if (parts.size() == 1) return parts.front();
  const Eigen::Vector2d a = attention_weights();
  Matrix out(parts[0].rows(), parts[0].cols() + parts[1].cols());
  out << a[0] * parts[0], a[1] * parts[1];
  return out;
}

Matrix NlsfModel::trunk(const GraphContext& ctx, const Matrix& x) const {
  if (cfg_.task == Task::GraphLevel) throw InvalidArgument("graph-level NLSFs have no node-space trunk");
  if (static_cast<int>(ctx.frames.size()) != num_branches()) throw DimensionError("graph context branch count mismatch");
  std::vector<Matrix> parts;
  for (int b = 0; b < num_branches(); ++b) parts.push_back(run_branch(b, ctx.frames[b], x, nullptr));
  return combine(parts);
}

Matrix NlsfModel::graph_features(const GraphContext& ctx, const Matrix& x) const {
  if (cfg_.task != Task::GraphLevel) throw InvalidArgument("graph_features needs a graph-level model");
  std::vector<Matrix> parts;
  for (int b = 0; b < num_branches(); ++b) parts.push_back(analyze(ctx.frames[b], x, cfg_.norm).values.transpose());
  return graph_psi_.forward(combine(parts));
}

Matrix NlsfModel::pooled(const GraphContext& ctx, const Matrix& x) const {
  return readout(cfg_.readout, cfg_.readout_p, nn::activate(cfg_.pool_activation, trunk(ctx, x)));
}

Matrix NlsfModel::forward(const GraphContext& ctx, const Matrix& x, ForwardTape* tape) const {
  if (x.cols() != cfg_.in_dim) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " channels, model expects " +
                         std::to_string(cfg_.in_dim));
  }
  if (x.rows() != ctx.n) throw DimensionError("input row count does not match the graph context");
  if (static_cast<int>(ctx.frames.size()) != num_branches()) throw DimensionError("graph context branch count mismatch");
  if (tape) {
    *tape = ForwardTape{};
    tape->ctx = &ctx;
    tape->branches.resize(num_branches());
  }
  std::vector<Matrix> parts;
  for (int b = 0; b < num_branches(); ++b) {
    if (cfg_.task == Task::GraphLevel) {
      parts.push_back(analyze(ctx.frames[b], x, cfg_.norm).values.transpose());
    } else {
      parts.push_back(run_branch(b, ctx.frames[b], x, tape ? &tape->branches[b] : nullptr));
    }
  }
  const Matrix t = combine(parts);
  if (tape) {
    tape->branch_out = parts;
    tape->trunk = t;
  }
  switch (cfg_.task) {
    case Task::Node:
      return head_.forward(t, tape ? &tape->head : nullptr);
    case Task::Pooling: {
      const Matrix a = nn::activate(cfg_.pool_activation, t);
      const Matrix p = readout(cfg_.readout, cfg_.readout_p, a);
      if (tape) {
        tape->activated = a;
        tape->pooled = p;
      }
      return head_.forward(p, tape ? &tape->head : nullptr);
    }
    case Task::GraphLevel: {
      const Matrix f = graph_psi_.forward(t, tape ? &tape->graph_psi : nullptr);
      if (tape) tape->graph_features = f;
      return head_.forward(f, tape ? &tape->head : nullptr);
    }
  }
  return {};
}

namespace {

void accumulate(std::vector<Matrix>& grads, std::size_t offset, const std::vector<Matrix>& part) {
  for (std::size_t k = 0; k < part.size(); ++k) grads.at(offset + k) += part[k];
}

}  // namespace

Matrix NlsfModel::branch_backward(int b, const Frame& frame, const std::vector<LayerTape>& tape, const Matrix& grad_out,
                                  std::vector<Matrix>& grads, std::size_t& offset) const {
  // Parameter offsets of this branch, in params() order.
  std::vector<std::size_t> psi_off(cfg_.layers), mix_off(cfg_.layers, 0);
  for (int l = 0; l < cfg_.layers; ++l) {
    psi_off[l] = offset;
    offset += 2 * psi_[b][l].num_layers();
    if (static_cast<std::size_t>(l) < mix_[b].size()) mix_off[l] = offset++;
  }

  Matrix g_theta = grad_out;
  Matrix g_x;
  for (int l = cfg_.layers - 1; l >= 0; --l) {
    const LayerTape& lt = tape[l];
    const Eigen::Index w = lt.x.cols();
    const int B = frame.num_blocks();
    Matrix g_h(lt.h.rows(), lt.h.cols());
    Matrix g_o(1, lt.psi_out.cols());
    if (is_diag(cfg_.variant)) {
      for (int j = 0; j < B; ++j) {
        for (Eigen::Index k = 0; k < w; ++k) {
          g_o(0, j * w + k) = lt.h.col(j * w + k).dot(g_theta.col(k));
          g_h.col(j * w + k) = lt.psi_out(0, j * w + k) * g_theta.col(k);
        }
      }
    } else {
      const Eigen::Index ow = g_theta.cols();
      const Matrix R = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          lt.psi_out.data(), B * w, ow);
      g_h = g_theta * R.transpose();
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gR = lt.h.transpose() * g_theta;
      g_o = Eigen::Map<const Matrix>(gR.data(), 1, gR.size());
    }
    std::vector<Matrix> pg;
    const Matrix g_c = psi_[b][l].backward(lt.psi, g_o, pg);
    accumulate(grads, psi_off[l], pg);
    g_x = normalized_blocks_backward(frame, lt.x, cfg_.stability, g_h, cfg_.norm) +
          analyze_backward(frame, lt.x, g_c.row(0).transpose(), cfg_.norm);
    if (l > 0) {
      const Matrix& prev = tape[l - 1].theta;
      if (static_cast<std::size_t>(l - 1) < mix_[b].size()) {
        grads.at(mix_off[l - 1]) += prev.transpose() * g_x;
        g_theta = g_x * mix_[b][l - 1].transpose();
      } else {
        g_theta = g_x;
      }
    }
  }
  return g_x;
}

void NlsfModel::backward(const ForwardTape& tape, const Matrix& grad_logits, std::vector<Matrix>& grads) const {
  if (!tape.ctx) throw InvalidArgument("backward needs a tape from forward");
  // Offsets in params() order.
  std::size_t total = 0;
  for (std::size_t b = 0; b < psi_.size(); ++b) {
    for (const auto& m : psi_[b]) total += 2 * m.num_layers();
    total += mix_[b].size();
  }
  const std::size_t gpsi_off = total;
  if (cfg_.task == Task::GraphLevel) total += 2 * graph_psi_.num_layers();
  const std::size_t head_off = total;
  total += 2 * head_.num_layers();
  const std::size_t att_off = total;
  if (cfg_.attention()) ++total;

  if (grads.size() != total) throw DimensionError("gradient buffer does not match model parameters");

  std::vector<Matrix> pg;
  Matrix g = head_.backward(tape.head, grad_logits, pg);
  accumulate(grads, head_off, pg);

  if (cfg_.task == Task::Pooling) {
    g = readout_backward(cfg_.readout, cfg_.readout_p, tape.activated, g);
    g = nn::activate_backward(cfg_.pool_activation, tape.trunk, g);
  } else if (cfg_.task == Task::GraphLevel) {
    g = graph_psi_.backward(tape.graph_psi, g, pg);
    accumulate(grads, gpsi_off, pg);
  }

  // Split the trunk gradient across branches.
  std::vector<Matrix> g_parts;
  if (!cfg_.attention()) {
    g_parts.push_back(g);
  } else {
    const Eigen::Vector2d a = attention_weights();
    const Eigen::Index w0 = tape.branch_out[0].cols();
    const Matrix g0 = g.leftCols(w0);
    const Matrix g1 = g.rightCols(g.cols() - w0);
    const double ga0 = g0.cwiseProduct(tape.branch_out[0]).sum();
    const double ga1 = g1.cwiseProduct(tape.branch_out[1]).sum();
    const double mean = a[0] * ga0 + a[1] * ga1;
    grads.at(att_off)(0, 0) += a[0] * (ga0 - mean);
    grads.at(att_off)(0, 1) += a[1] * (ga1 - mean);
    g_parts.push_back(a[0] * g0);
    g_parts.push_back(a[1] * g1);
  }

  if (cfg_.task == Task::GraphLevel) return;
  std::size_t offset = 0;
  for (int b = 0; b < num_branches(); ++b) {
    branch_backward(b, tape.ctx->frames[b], tape.branches[b], g_parts[b], grads, offset);
  }
}

// ---------------------------------------------------------------------------

SymmetryBreakWitness relu_symmetry_break_witness(const eig::SpectralBasis& basis, std::uint64_t seed, int budget,
                                                 double threshold) {
  if (!basis.complete) throw InvalidArgument("symmetry-break search needs a complete basis");
  if (basis.num_groups() < 2) throw InvalidArgument("symmetry-break search needs at least two eigenspaces");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector q(basis.num_groups());
  for (auto& v : q) v = normal(rng);
  const Matrix Q = verify::linear_spectral_filter(basis, q);
  const auto spec = verify::ShiftSpec::index(static_cast<int>(basis.num_groups()));
  SymmetryBreakWitness best;
  for (int s = 0; s < budget; ++s) {
    const auto shift = verify::sample_functional_shift(basis, spec, rng);
    Matrix x(basis.num_nodes(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = normal(rng);
    const Matrix lhs = (Q * shift.U * x).cwiseMax(0.0);
    const Matrix rhs = shift.U * (Q * x).cwiseMax(0.0);
    const double v = (lhs - rhs).norm();
    best.samples = s + 1;
    if (v > best.violation) {
      best.violation = v;
      best.U = shift.U;
      best.x = x;
    }
    if (v > threshold) {
      best.found = true;
      break;
    }
  }
  return best;
}

}  // namespace nlsf
