#include "nlsf/spectral.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

namespace nlsf {

double SignalNorm::operator()(const Eigen::Ref<const Vector>& v) const {
  const double scale = normalized && v.size() > 0 ? std::pow(static_cast<double>(v.size()), -1.0 / p) : 1.0;
  if (p == 2.0) return scale * v.norm();
  if (p == 1.0) return scale * v.lpNorm<1>();
  return scale * std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

Vector SignalNorm::gradient(const Eigen::Ref<const Vector>& v) const {
  const double scale = normalized && v.size() > 0 ? std::pow(static_cast<double>(v.size()), -1.0 / p) : 1.0;
  if (p == 1.0) return scale * v.cwiseSign();
  const double raw = (*this)(v) / scale;
  if (raw == 0.0) return Vector::Zero(v.size());
  if (p == 2.0) return scale * v / raw;
  Vector g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    g[i] = (v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0)) * std::pow(std::abs(v[i]) / raw, p - 1.0);
  }
  return scale * g;
}

void StabilityParams::validate() const {
  if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("stability parameter a must lie in [0, 1]");
  if (!(e >= 0.0)) throw InvalidArgument("stability parameter e must be nonnegative");
}

Frame Frame::index(const eig::SpectralBasis& basis, int J, bool leading) {
  if (J < 0 || static_cast<std::size_t>(J) > basis.num_groups()) {
    throw CoverageError("index frame needs J = " + std::to_string(J) + " eigenspaces, basis has " +
                        std::to_string(basis.num_groups()));
  }
  if (!basis.complete && static_cast<std::size_t>(J) == basis.num_groups()) {
    // The last computed eigenspace may be cut short by the solver.
    throw CoverageError("index frame with J = " + std::to_string(J) +
                        " uses the last computed eigenspace of a partial basis; request more eigenpairs");
  }
  Frame f;
  f.mode_ = SpectralMode::Index;
  f.n_ = basis.num_nodes();
  f.complement_ = !leading;
  for (int i = 0; i < J; ++i) f.vectors_.push_back(basis.group_vectors(i));
  f.mark_empty_complement(basis);
  return f;
}

Frame Frame::value(const eig::SpectralBasis& basis, const FilterBank& bank, bool leading) {
  Frame f;
  f.mode_ = SpectralMode::Value;
  f.n_ = basis.num_nodes();
  f.complement_ = !leading;
  for (int j = 0; j < bank.K(); ++j) {
    if (!band_covered(basis, bank, j)) {
      throw CoverageError("band " + std::to_string(j) + " [" + std::to_string(bank.bands[j].lo) + ", " +
                          std::to_string(bank.bands[j].hi) + ") extends past the computed eigenvalues (max |lambda| = " +
                          std::to_string(basis.max_computed_abs()) + ")");
    }
    f.vectors_.push_back(band_vectors(basis, bank, j));
  }
  f.mark_empty_complement(basis);
  return f;
}

void Frame::mark_empty_complement(const eig::SpectralBasis& basis) {
  Eigen::Index cols = 0;
  for (const Matrix& v : vectors_) cols += v.cols();
  // Exact zero instead of rounding residue keeps the complement's norm smooth.
  empty_complement_ = complement_ && basis.complete && cols == n_;
}

Matrix Frame::project(int j, const Matrix& x) const {
  if (j < 0 || j >= num_blocks()) throw InvalidArgument("frame block " + std::to_string(j) + " out of range");
  if (x.rows() != n_) {
    throw DimensionError("signal has " + std::to_string(x.rows()) + " rows, frame has " + std::to_string(n_) + " nodes");
  }
  if (j < retained()) return vectors_[j] * (vectors_[j].transpose() * x);
  if (empty_complement_) return Matrix::Zero(n_, x.cols());
  Matrix rest = x;
  for (const Matrix& v : vectors_) rest -= v * (v.transpose() * x);
  return rest;
}

std::vector<Matrix> Frame::project_all(const Matrix& x) const {
  if (x.rows() != n_) {
    throw DimensionError("signal has " + std::to_string(x.rows()) + " rows, frame has " + std::to_string(n_) + " nodes");
  }
  std::vector<Matrix> out;
  out.reserve(num_blocks());
  Matrix rest = x;
  for (const Matrix& v : vectors_) {
    out.push_back(v * (v.transpose() * x));
    rest -= out.back();
  }
  if (empty_complement_) rest.setZero();
  if (complement_) out.push_back(std::move(rest));
  return out;
}

Matrix Frame::project_all_adjoint(const std::vector<Matrix>& g) const {
  if (static_cast<int>(g.size()) != num_blocks()) throw DimensionError("adjoint: block count mismatch");
  const bool live = complement_ && !empty_complement_;
  Matrix out = live ? g.back() : Matrix::Zero(n_, g.front().cols());
  for (int j = 0; j < retained(); ++j) {
    Matrix diff = live ? Matrix(g[j] - g.back()) : g[j];
    out += vectors_[j] * (vectors_[j].transpose() * diff);
  }
  return out;
}

Matrix SpectralCoefficients::as_matrix() const {
  Matrix m(rows(), d);
  for (int j = 0; j < rows(); ++j)
    for (int c = 0; c < d; ++c) m(j, c) = values[j * d + c];
  return m;
}

namespace {

double denominator(double s, const StabilityParams& sp) {
  const double den = sp.a == 0.0 ? 1.0 + sp.e : std::pow(s, sp.a) + sp.e;
  if (den == 0.0) throw DivideByZero("synthesis normalization: zero block norm with e = 0");
  return den;
}

// Blocks at rounding level relative to their channel count as exact zeros, so
// e = 0 reports them instead of normalizing noise.
bool negligible(const Eigen::Ref<const Vector>& block, const Eigen::Ref<const Vector>& channel) {
  return block.norm() <= 1e-12 * channel.norm();
}

}  // namespace

Matrix block_norms(const Frame& frame, const Matrix& x, const SignalNorm& norm) {
  const auto blocks = frame.project_all(x);
  Matrix out(blocks.size(), x.cols());
  for (std::size_t j = 0; j < blocks.size(); ++j)
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(j, c) = norm(blocks[j].col(c));
  return out;
}

SpectralCoefficients analyze(const Frame& frame, const Matrix& x, const SignalNorm& norm) {
  SpectralCoefficients c;
  c.mode = frame.mode();
  c.B = frame.retained();
  c.d = static_cast<int>(x.cols());
  c.complement = frame.has_complement();
  const Matrix m = block_norms(frame, x, norm);
  c.values.resize(m.size());
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k) c.values[j * c.d + k] = m(j, k);
  return c;
}

SpectralCoefficients analyze_index(const eig::SpectralBasis& basis, const Matrix& x, int J, const SignalNorm& norm) {
  return analyze(Frame::index(basis, J), x, norm);
}

SpectralCoefficients analyze_value(const eig::SpectralBasis& basis, const FilterBank& bank, const Matrix& x,
                                   const SignalNorm& norm) {
  return analyze(Frame::value(basis, bank), x, norm);
}

Matrix analyze_backward(const Frame& frame, const Matrix& x, const Vector& grad_coeffs, const SignalNorm& norm) {
  const auto blocks = frame.project_all(x);
  const Eigen::Index d = x.cols();
  if (grad_coeffs.size() != static_cast<Eigen::Index>(blocks.size()) * d) {
    throw DimensionError("analyze_backward: gradient length mismatch");
  }
  std::vector<Matrix> g(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    g[j].resize(x.rows(), d);
    for (Eigen::Index c = 0; c < d; ++c) g[j].col(c) = grad_coeffs[j * d + c] * norm.gradient(blocks[j].col(c));
  }
  return frame.project_all_adjoint(g);
}

Matrix normalized_blocks(const Frame& frame, const Matrix& x, const StabilityParams& sp, const SignalNorm& norm) {
  const auto blocks = frame.project_all(x);
  const Eigen::Index d = x.cols();
  Matrix h(x.rows(), static_cast<Eigen::Index>(blocks.size()) * d);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto v = blocks[j].col(c);
      if (negligible(v, x.col(c))) {
        denominator(0.0, sp);
        h.col(j * d + c).setZero();
      } else {
        h.col(j * d + c) = v / denominator(norm(v), sp);
      }
    }
  }
  return h;
}

Matrix normalized_blocks_backward(const Frame& frame, const Matrix& x, const StabilityParams& sp, const Matrix& grad_h,
                                  const SignalNorm& norm) {
  const auto blocks = frame.project_all(x);
  const Eigen::Index d = x.cols();
  if (grad_h.rows() != x.rows() || grad_h.cols() != static_cast<Eigen::Index>(blocks.size()) * d) {
    throw DimensionError("normalized_blocks_backward: gradient shape mismatch");
  }
  std::vector<Matrix> g(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    g[j].resize(x.rows(), d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto v = blocks[j].col(c);
      const auto gh = grad_h.col(j * d + c);
      if (negligible(v, x.col(c))) {
        g[j].col(c).setZero();
        continue;
      }
      const double s = norm(v);
      const double den = denominator(s, sp);
      Vector gv = gh / den;
      if (sp.a != 0.0 && s > 0.0) {
        const double dden = sp.a * std::pow(s, sp.a - 1.0);
        gv -= (gh.dot(v) / (den * den)) * dden * norm.gradient(v);
      }
      g[j].col(c) = gv;
    }
  }
  return frame.project_all_adjoint(g);
}

Matrix synthesize(const Frame& frame, const Matrix& R, const Matrix& x, const StabilityParams& sp,
                  const SignalNorm& norm) {
  sp.validate();
  const Eigen::Index width = static_cast<Eigen::Index>(frame.num_blocks()) * x.cols();
  if (R.rows() != width) {
    throw DimensionError("synthesis matrix has " + std::to_string(R.rows()) + " rows, expected " +
                         std::to_string(width));
  }
  return normalized_blocks(frame, x, sp, norm) * R;
}

Matrix synthesize_index(const Matrix& R, const eig::SpectralBasis& basis, const Matrix& x, int J,
                        const StabilityParams& sp) {
  return synthesize(Frame::index(basis, J), R, x, sp);
}

Matrix synthesize_value(const Matrix& R, const eig::SpectralBasis& basis, const FilterBank& bank, const Matrix& x,
                        const StabilityParams& sp) {
  return synthesize(Frame::value(basis, bank), R, x, sp);
}

Matrix synthesize_diag(const Frame& frame, const Matrix& r, const Matrix& x, const StabilityParams& sp,
                       const SignalNorm& norm) {
  sp.validate();
  if (r.rows() != frame.num_blocks() || r.cols() != x.cols()) {
    throw DimensionError("diag synthesis coefficients must be " + std::to_string(frame.num_blocks()) + " x " +
                         std::to_string(x.cols()));
  }
  const Matrix h = normalized_blocks(frame, x, sp, norm);
  const Eigen::Index d = x.cols();
  Matrix out = Matrix::Zero(x.rows(), d);
  for (int j = 0; j < frame.num_blocks(); ++j)
    for (Eigen::Index c = 0; c < d; ++c) out.col(c) += r(j, c) * h.col(j * d + c);
  return out;
}

Vector synthesis_singular_values(const Frame& frame, const Matrix& x, const StabilityParams& sp) {
  sp.validate();
  if (x.cols() != 1) throw DimensionError("synthesis_singular_values expects a one-channel signal");
  const Matrix norms = block_norms(frame, x);
  Vector sigma(norms.rows());
  for (Eigen::Index j = 0; j < norms.rows(); ++j) {
    const double s = norms(j, 0);
    if (s <= 1e-12 * x.norm()) throw ZeroBlock("block " + std::to_string(j) + " of the synthesis frame is zero");
    sigma[j] = s / denominator(s, sp);
  }
  return sigma;
}

double dist_spectral(const SpectralCoefficients& a, const SpectralCoefficients& b) {
  if (a.mode != b.mode || a.B != b.B || a.d != b.d || a.complement != b.complement) {
    throw InvalidArgument("dist_spectral: coefficients come from different modes or shapes");
  }
  return (a.values - b.values).norm();
}

void write_coefficients_csv(const std::filesystem::path& path, const SpectralCoefficients& c) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "band,channel,value\n" << std::setprecision(17);
  for (int j = 0; j < c.rows(); ++j)
    for (int k = 0; k < c.d; ++k) out << j << ',' << k << ',' << c.at(j, k) << '\n';
}

}  // namespace nlsf
