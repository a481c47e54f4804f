#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "nlsf/eig.hpp"

namespace nlsf::eig {

namespace {

// Orthogonalize v against the columns of q (two passes) and return its norm.
double orthogonalize(const Matrix& q, Eigen::Index cols, Vector& v) {
  for (int pass = 0; pass < 2; ++pass) {
    if (cols == 0) break;
    const auto qc = q.leftCols(cols);
    v -= qc * (qc.transpose() * v);
  }
  return v.norm();
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

struct Ritz {
  Vector values;
  Matrix vectors;
};

Ritz rayleigh_ritz(const SparseSymMatrix& delta, const Matrix& q) {
  const Matrix aq = delta.full() * q;
  Matrix t = q.transpose() * aq;
  t = 0.5 * (t + t.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(t);
  const Vector& th = solver.eigenvalues();
  std::vector<Eigen::Index> order(th.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(th[a]) < std::abs(th[b]); });
  Ritz out;
  out.values.resize(th.size());
  out.vectors.resize(q.rows(), th.size());
  for (Eigen::Index k = 0; k < th.size(); ++k) {
    out.values[k] = th[order[k]];
    out.vectors.col(k) = q * solver.eigenvectors().col(order[k]);
  }
  return out;
}

SpectralBasis make_basis(const SparseSymMatrix& delta, const Ritz& ritz, Eigen::Index m, const EigConfig& cfg,
                         int iterations) {
  SpectralBasis b;
  b.eigenvalues = ritz.values.head(m);
  b.eigenvectors = ritz.vectors.leftCols(m);
  b.groups = group_eigenspaces(b.eigenvalues, cfg.group_tol);
  b.complete = m == delta.size();
  b.iterations = iterations;
  if (b.complete) {
    b.lambda_max = b.max_computed_abs();
  } else {
    b.lambda_max = std::max(1.001 * estimate_lambda_max(delta, cfg.seed ^ 0x9e3779b97f4a7c15ULL), b.max_computed_abs());
  }
  return b;
}

}  // namespace

SpectralBasis lanczos_smallest(const SparseSymMatrix& delta, const EigConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = delta.size();
  const Eigen::Index J = cfg.num_pairs;
  if (J > n) {
    throw InvalidArgument("lanczos_smallest: num_pairs = " + std::to_string(J) + " exceeds n = " + std::to_string(n));
  }

  const Eigen::Index steps = cfg.krylov_steps > 0 ? cfg.krylov_steps : std::max<Eigen::Index>(2 * J, J + 30);
  const Eigen::Index keep_target = J + std::min<Eigen::Index>(J, 10);
  const Eigen::Index cap = std::min(n, keep_target + steps);
  const double scale = std::max(1.0, delta.nnz() == 0 ? 0.0 : delta.full().coeffs().abs().maxCoeff());

  std::mt19937_64 rng(cfg.seed);
  Matrix q(n, cap);
  Eigen::Index cols = 0;
  Ritz ritz;
  Vector prev;
  double worst = 0.0;

  // Appends v (after orthogonalization) or a fresh random direction if v is
  // (numerically) inside the current span.
  auto append = [&](Vector v) {
    double nv = orthogonalize(q, cols, v);
    int tries = 0;
    while (nv <= 1e-10 * scale && tries++ < 10) {
      v = random_vector(rng, n);
      nv = orthogonalize(q, cols, v);
    }
    if (nv <= 1e-10 * scale) return false;
    q.col(cols++) = v / nv;
    return true;
  };

  for (int it = 1; it <= cfg.max_iter; ++it) {
    // Expansion: a Krylov run from a start vector that mixes the current
    // residuals with a fresh random direction.
    Vector start = random_vector(rng, n);
    start.normalize();
    if (ritz.values.size() > 0) {
      const Eigen::Index m = std::min(J, ritz.values.size());
      const Matrix res = delta.full() * ritz.vectors.leftCols(m) - ritz.vectors.leftCols(m) * ritz.values.head(m).asDiagonal();
      Vector rsum = Vector::Zero(n);
      for (Eigen::Index k = 0; k < m; ++k) {
        const double rn = res.col(k).norm();
        if (rn > 0.0) rsum += res.col(k) / rn;
      }
      if (rsum.norm() > 0.0) start += rsum / rsum.norm();
    }
    if (!append(start)) break;
    while (cols < cap) {
      if (!append(delta.full() * q.col(cols - 1))) break;
    }

    ritz = rayleigh_ritz(delta, q.leftCols(cols));
    const Eigen::Index m = std::min(J, ritz.values.size());

    worst = 0.0;
    const Matrix res = delta.full() * ritz.vectors.leftCols(m) - ritz.vectors.leftCols(m) * ritz.values.head(m).asDiagonal();
    for (Eigen::Index k = 0; k < m; ++k) {
      worst = std::max(worst, res.col(k).norm() / std::max(1.0, std::abs(ritz.values[k])));
    }

    const bool full_space = cols == n;
    bool stable = prev.size() == m;
    if (stable) {
      for (Eigen::Index k = 0; k < m; ++k) {
        if (std::abs(prev[k] - ritz.values[k]) > cfg.residual_tol * std::max(1.0, std::abs(ritz.values[k]))) {
          stable = false;
          break;
        }
      }
    }
    if (m == J && (full_space || (worst <= cfg.residual_tol && stable))) {
      return make_basis(delta, ritz, J, cfg, it);
    }
    prev = ritz.values.head(m);

    // Thick restart: keep the best Ritz vectors.
    const Eigen::Index keep = std::min({keep_target, ritz.values.size(), cap - 1});
    q.leftCols(keep) = ritz.vectors.leftCols(keep);
    cols = keep;
  }

  const Eigen::Index m = std::min(J, ritz.values.size());
  throw MaxIterExceeded("lanczos_smallest: residual " + std::to_string(worst) + " above tolerance " +
                            std::to_string(cfg.residual_tol) + " after " + std::to_string(cfg.max_iter) + " restarts",
                        make_basis(delta, ritz, m, cfg, cfg.max_iter), worst);
}

}  // namespace nlsf::eig
