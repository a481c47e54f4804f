#include "nlsf/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace nlsf::eig {

double SpectralBasis::max_computed_abs() const {
  return eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
}

SpectralBasis SpectralBasis::with_groups(std::vector<Group> partition) const {
  Eigen::Index at = 0;
  for (const Group& g : partition) {
    if (g.begin != at || g.end <= g.begin) throw InvalidArgument("with_groups: partition must tile the columns");
    at = g.end;
  }
  if (at != num_pairs()) throw InvalidArgument("with_groups: partition must cover every column");
  SpectralBasis out = *this;
  out.groups = std::move(partition);
  return out;
}

void EigConfig::validate() const {
  if (num_pairs < 1) throw InvalidArgument("num_pairs must be >= 1");
  if (!(residual_tol > 0.0) || !(group_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
}

std::vector<Group> group_eigenspaces(const Vector& eigenvalues, double group_tol) {
  std::vector<Group> groups;
  const Eigen::Index m = eigenvalues.size();
  if (m == 0) return groups;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= m; ++i) {
    const bool split =
        i == m || std::abs(eigenvalues[i] - eigenvalues[i - 1]) > group_tol * std::max(1.0, std::abs(eigenvalues[i - 1]));
    if (split) {
      groups.push_back({start, i});
      start = i;
    }
  }
  return groups;
}

SpectralBasis dense_eig(const Matrix& delta, double group_tol) {
  if (delta.rows() != delta.cols()) throw DimensionError("dense_eig: matrix must be square");
  const Eigen::Index n = delta.rows();
  SpectralBasis b;
  b.complete = true;
  b.iterations = 1;
  if (n == 0) return b;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(delta);
  if (solver.info() != Eigen::Success) throw Error("dense_eig: symmetric eigensolver did not converge");

  const Vector& lam = solver.eigenvalues();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index c) { return std::abs(lam[a]) < std::abs(lam[c]); });
  b.eigenvalues.resize(n);
  b.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    b.eigenvalues[k] = lam[order[k]];
    b.eigenvectors.col(k) = solver.eigenvectors().col(order[k]);
  }
  b.groups = group_eigenspaces(b.eigenvalues, group_tol);
  b.lambda_max = std::abs(b.eigenvalues[n - 1]);
  return b;
}

SpectralBasis dense_eig(const SparseSymMatrix& delta, double group_tol, Eigen::Index max_n) {
  if (delta.size() > max_n) {
    throw InvalidArgument("dense_eig: n = " + std::to_string(delta.size()) + " exceeds dense limit " +
                          std::to_string(max_n));
  }
  return dense_eig(delta.to_dense(), group_tol);
}

Matrix project_group(const SpectralBasis& basis, std::size_t i, const Matrix& x) {
  if (i >= basis.groups.size()) {
    throw InvalidArgument("project_group: group " + std::to_string(i) + " out of range (" +
                          std::to_string(basis.groups.size()) + " groups)");
  }
  if (x.rows() != basis.num_nodes()) throw DimensionError("project_group: signal row count mismatch");
  const auto v = basis.group_vectors(i);
  return v * (v.transpose() * x);
}

Matrix project_complement(const SpectralBasis& basis, std::size_t J, const Matrix& x) {
  if (J > basis.groups.size()) throw InvalidArgument("project_complement: J exceeds number of groups");
  if (x.rows() != basis.num_nodes()) throw DimensionError("project_complement: signal row count mismatch");
  if (J == 0) return x;
  const auto v = basis.eigenvectors.leftCols(basis.groups[J - 1].end);
  return x - v * (v.transpose() * x);
}

double estimate_lambda_max(const SparseSymMatrix& delta, std::uint64_t seed, int iters) {
  const auto n = delta.size();
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (auto& v : x) v = normal(rng);
  x.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector y = delta.full() * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    estimate = norm;
    x = y / norm;
  }
  return estimate;
}

double max_relative_residual(const SparseSymMatrix& delta, const SpectralBasis& basis) {
  const Matrix av = delta.full() * basis.eigenvectors;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < basis.num_pairs(); ++k) {
    const double lam = basis.eigenvalues[k];
    const double r = (av.col(k) - lam * basis.eigenvectors.col(k)).norm() / std::max(1.0, std::abs(lam));
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace nlsf::eig
