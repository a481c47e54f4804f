#include <cmath>
#include <string>

#include <Eigen/QR>

#include "nlsf/verify.hpp"

namespace nlsf::verify {

Matrix haar_orthogonal(Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

std::vector<std::vector<Eigen::Index>> shift_blocks(const eig::SpectralBasis& basis, const ShiftSpec& spec) {
  if (!basis.complete) throw InvalidArgument("functional shifts need a complete basis (partial basis given)");
  const Eigen::Index m = basis.num_pairs();
  std::vector<std::vector<Eigen::Index>> blocks;
  std::vector<Eigen::Index> rest;
  if (spec.mode == SpectralMode::Index) {
    if (spec.J < 0 || static_cast<std::size_t>(spec.J) > basis.num_groups()) {
      throw InvalidArgument("shift J = " + std::to_string(spec.J) + " exceeds the number of eigenspaces");
    }
    for (int i = 0; i < spec.J; ++i) {
      std::vector<Eigen::Index> cols;
      for (Eigen::Index k = basis.groups[i].begin; k < basis.groups[i].end; ++k) cols.push_back(k);
      blocks.push_back(std::move(cols));
    }
    const Eigen::Index start = spec.J == 0 ? 0 : basis.groups[spec.J - 1].end;
    for (Eigen::Index k = start; k < m; ++k) rest.push_back(k);
  } else {
    const auto member = band_membership(basis, spec.bank);
    blocks.resize(spec.bank.K());
    for (Eigen::Index k = 0; k < m; ++k) {
      if (member[k] < spec.bank.K()) {
        blocks[member[k]].push_back(k);
      } else {
        rest.push_back(k);
      }
    }
    std::erase_if(blocks, [](const auto& b) { return b.empty(); });
  }
  if (!rest.empty()) blocks.push_back(std::move(rest));
  return blocks;
}

FunctionalShift sample_functional_shift(const eig::SpectralBasis& basis, const ShiftSpec& spec, std::mt19937_64& rng) {
  FunctionalShift s;
  s.blocks = shift_blocks(basis, spec);
  const Eigen::Index n = basis.num_nodes();
  s.U = Matrix::Zero(n, n);
  for (const auto& cols : s.blocks) {
    Matrix v(n, cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) v.col(k) = basis.eigenvectors.col(cols[k]);
    const Matrix o = haar_orthogonal(static_cast<Eigen::Index>(cols.size()), rng);
    s.U += v * o * v.transpose();
  }
  return s;
}

FunctionalShift sample_functional_shift(const eig::SpectralBasis& basis, const ShiftSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_functional_shift(basis, spec, rng);
}

double shift_defect(const eig::SpectralBasis& basis, const FunctionalShift& shift) {
  const Eigen::Index n = shift.U.rows();
  double worst = (shift.U.transpose() * shift.U - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  for (const auto& cols : shift.blocks) {
    Matrix v(n, cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) v.col(k) = basis.eigenvectors.col(cols[k]);
    const Matrix p = v * v.transpose();
    worst = std::max(worst, (shift.U * p - p * shift.U).cwiseAbs().maxCoeff());
  }
  return worst;
}

EquivarianceReport check_equivariance(const std::function<Matrix(const Matrix&)>& f, const eig::SpectralBasis& basis,
                                      const ShiftSpec& spec, const Matrix& x, int num_shifts, std::uint64_t seed,
                                      double tol) {
  EquivarianceReport rep;
  const Matrix fx = f(x);
  const double scale = std::max(1.0, fx.norm());
  std::mt19937_64 rng(seed);
  for (int s = 0; s < num_shifts; ++s) {
    const auto shift = sample_functional_shift(basis, spec, rng);
    const double r = (f(shift.U * x) - shift.U * fx).norm() / scale;
    ++rep.cases;
    if (r > rep.worst || rep.worst_index < 0) {
      rep.worst = r;
      rep.worst_index = s;
      rep.worst_U = shift.U;
    }
  }
  rep.passed = rep.worst <= tol;
  return rep;
}

EquivarianceReport check_equivariance(const NlsfModel& model, const GraphContext& ctx, const ShiftSpec& spec,
                                      const Matrix& x, int num_shifts, std::uint64_t seed, double tol) {
  if (model.num_branches() != 1) throw InvalidArgument("equivariance check needs a single-branch model");
  return check_equivariance([&](const Matrix& in) { return model.trunk(ctx, in); }, ctx.bases.at(0), spec, x,
                            num_shifts, seed, tol);
}

Matrix linear_spectral_filter(const eig::SpectralBasis& basis, const Vector& q) {
  if (!basis.complete) throw InvalidArgument("linear spectral filter needs a complete basis");
  if (q.size() != static_cast<Eigen::Index>(basis.num_groups())) throw DimensionError("one response value per eigenspace");
  const Eigen::Index n = basis.num_nodes();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < basis.num_groups(); ++i) {
    const auto v = basis.group_vectors(i);
    out += q[static_cast<Eigen::Index>(i)] * v * v.transpose();
  }
  return out;
}

}  // namespace nlsf::verify
