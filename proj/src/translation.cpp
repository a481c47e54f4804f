#include <cmath>
#include <limits>

#include "nlsf/verify.hpp"

namespace nlsf::verify {

namespace {

// Pixel (x, y) lives at index y * M + x.
Eigen::Index at(int M, int x, int y) { return static_cast<Eigen::Index>(((y % M + M) % M) * M + (x % M + M) % M); }

GraphSignal torus_grid(int M) {
  std::vector<Edge> edges;
  for (int y = 0; y < M; ++y) {
    for (int x = 0; x < M; ++x) {
      edges.push_back({at(M, x, y), at(M, x + 1, y), 1.0});
      edges.push_back({at(M, x, y), at(M, x, y + 1), 1.0});
    }
  }
  return make_graph(static_cast<std::int64_t>(M) * M, edges);
}

}  // namespace

Matrix grid_translation(int M, int dx, int dy) {
  const Eigen::Index n = static_cast<Eigen::Index>(M) * M;
  Matrix t = Matrix::Zero(n, n);
  for (int y = 0; y < M; ++y)
    for (int x = 0; x < M; ++x) t(at(M, x + dx, y + dy), at(M, x, y)) = 1.0;
  return t;
}

TranslationReport grid_functional_translation(int M, std::pair<int, int> t_low, std::pair<int, int> t_high,
                                              double cutoff) {
  if (M < 3) throw InvalidArgument("grid size M must be >= 3");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw InvalidArgument("cutoff must lie in (0, 1)");
  const auto basis = eig::dense_eig(build_laplacian(torus_grid(M), GsoKind::Combinatorial));
  const Eigen::Index n = basis.num_nodes();
  const double edge = cutoff * basis.lambda_max;

  // Band projections by whole eigenspace so degenerate blocks never split.
  Matrix p_low = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < basis.num_groups(); ++i) {
    if (std::abs(basis.eigenvalues[basis.groups[i].begin]) < edge) {
      const auto v = basis.group_vectors(i);
      p_low += v * v.transpose();
    }
  }
  const Matrix p_high = Matrix::Identity(n, n) - p_low;

  // Translations are diagonal in the Fourier basis, so T_t P_band is the
  // band-limited modulation by t.
  const Matrix t_lo = grid_translation(M, t_low.first, t_low.second);
  const Matrix t_hi = grid_translation(M, t_high.first, t_high.second);

  TranslationReport rep;
  rep.op = t_lo * p_low + t_hi * p_high;
  rep.orthogonality = (rep.op.transpose() * rep.op - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  rep.commutation = std::max((rep.op * p_low - p_low * rep.op).cwiseAbs().maxCoeff(),
                             (rep.op * p_high - p_high * rep.op).cwiseAbs().maxCoeff());
  rep.equal_speed_error = (rep.op - t_lo).norm();
  rep.min_translation_distance = std::numeric_limits<double>::infinity();
  for (int dy = 0; dy < M; ++dy)
    for (int dx = 0; dx < M; ++dx)
      rep.min_translation_distance = std::min(rep.min_translation_distance, (rep.op - grid_translation(M, dx, dy)).norm());

  // Gaussian test image centred in the grid.
  Vector img(n);
  const double c = 0.5 * (M - 1), s = 0.15 * M;
  for (int y = 0; y < M; ++y)
    for (int x = 0; x < M; ++x) img[at(M, x, y)] = std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / (2 * s * s));
  const Vector moved = rep.op * img;
  rep.image.resize(M, M);
  for (int y = 0; y < M; ++y)
    for (int x = 0; x < M; ++x) rep.image(y, x) = moved[at(M, x, y)];
  return rep;
}

}  // namespace nlsf::verify
