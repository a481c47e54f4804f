#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "nlsf/verify.hpp"

namespace nlsf::verify {

double cut_norm_exact(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("cut norm needs a square matrix");
  const Eigen::Index n = m.rows();
  if (n > 14) throw InvalidArgument("cut_norm_exact enumerates subsets; N = " + std::to_string(n) + " exceeds 14");
  if (n == 0) return 0.0;
  // For fixed S the best T takes every column whose S-restricted sum has the
  // sign being maximized, so only S needs enumerating.
  double best = 0.0;
  Eigen::RowVectorXd col = Eigen::RowVectorXd::Zero(n);
  const std::uint32_t total = 1u << n;
  std::uint32_t gray = 0;
  for (std::uint32_t k = 1; k < total; ++k) {
    const std::uint32_t next = k ^ (k >> 1);
    const std::uint32_t flipped = next ^ gray;
    const int row = std::countr_zero(flipped);
    if (next & flipped) {
      col += m.row(row);
    } else {
      col -= m.row(row);
    }
    gray = next;
    double pos = 0.0, neg = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (col[j] > 0) pos += col[j];
      else neg += col[j];
    }
    best = std::max({best, pos, -neg});
  }
  return best / static_cast<double>(n * n);
}

double low_rank_bound(double alpha, int J, int R) {
  if (J < 1 || R < 1) throw InvalidArgument("J and R must be positive");
  return 1.5 * alpha * std::sqrt(static_cast<double>(R) / J);
}

Matrix leading_eigen_approx(const Matrix& m, int count) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  const Vector& mu = solver.eigenvalues();
  std::vector<Eigen::Index> order(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(mu[a]) > std::abs(mu[b]); });
  Matrix c = Matrix::Zero(m.rows(), m.cols());
  for (int k = 0; k < std::min<int>(count, static_cast<int>(mu.size())); ++k) {
    const auto v = solver.eigenvectors().col(order[k]);
    c += mu[order[k]] * v * v.transpose();
  }
  return c;
}

namespace {

LowRankReport finish(LowRankReport rep, double R) {
  const double p = 1.0 - 1.0 / R;
  const double sigma = std::sqrt(p * (1.0 - p) / rep.trials);
  rep.fraction = static_cast<double>(rep.satisfied) / rep.trials;
  rep.threshold = p - 3.0 * sigma;
  rep.passed = rep.fraction >= rep.threshold;
  return rep;
}

void check_args(int J, int R, int trials, int N) {
  if (J < 1 || R < 1 || J % R != 0) throw InvalidArgument("J / R must be a positive integer");
  if (trials < 1) throw InvalidArgument("trials must be positive");
  if (N < 1 || N > 14) throw InvalidArgument("N must lie in [1, 14] for the exact cut norm");
}

}  // namespace

LowRankReport check_low_rank_bound(double alpha, int J, int R, int trials, int N, std::uint64_t seed) {
  check_args(J, R, trials, N);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-alpha, alpha);
  std::uniform_int_distribution<int> pick(1, J);
  LowRankReport rep;
  rep.trials = trials;
  rep.bound = low_rank_bound(alpha, J, R);
  for (int t = 0; t < trials; ++t) {
    Matrix m(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) m(i, j) = m(j, i) = entry(rng);
    const int count = pick(rng);
    const double cn = cut_norm_exact(m - leading_eigen_approx(m, count));
    rep.worst_ratio = std::max(rep.worst_ratio, cn / rep.bound);
    if (cn <= rep.bound) ++rep.satisfied;
  }
  return finish(rep, R);
}

LowRankReport sparse_low_rank_bound(double alpha, int J, int R, int trials, int N, std::uint64_t seed, double p_in,
                                    double p_out) {
  check_args(J, R, trials, N);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-alpha, alpha);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(1, J);
  LowRankReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Matrix m = Matrix::Zero(N, N);
    int edges = 0;
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const bool same = (i < N / 2) == (j < N / 2);
        if (coin(rng) < (same ? p_in : p_out)) {
          m(i, j) = m(j, i) = entry(rng);
          edges += 2;
        }
      }
    }
    if (edges == 0) throw InvalidArgument("sampled graph has no edges (E = 0)");
    const double scale = static_cast<double>(N) * N / edges;
    const double bound = scale * low_rank_bound(alpha, J, R);
    const int count = pick(rng);
    const double cn = scale * cut_norm_exact(m - leading_eigen_approx(m, count));
    rep.bound = std::max(rep.bound, bound);
    rep.worst_ratio = std::max(rep.worst_ratio, cn / bound);
    if (cn <= bound) ++rep.satisfied;
  }
  return finish(rep, R);
}

}  // namespace nlsf::verify
