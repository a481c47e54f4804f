#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "nlsf/datasets.hpp"
#include "nlsf/error.hpp"
#include "nlsf/verify.hpp"

using namespace nlsf;
using namespace nlsf::verify;

namespace {

// Brute force over every pair of row and column subsets.
double cut_norm_oracle(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  double best = 0.0;
  for (int s = 0; s < (1 << n); ++s)
    for (int t = 0; t < (1 << n); ++t) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if ((s >> i & 1) && (t >> j & 1)) sum += m(i, j);
      best = std::max(best, std::abs(sum));
    }
  return best / (n * n);
}

eig::SpectralBasis basis_of(const GraphSignal& g) { return eig::dense_eig(build_laplacian(g, GsoKind::Combinatorial)); }

}  // namespace

TEST_CASE("cut norm") {
  CHECK(cut_norm_exact(Matrix::Ones(2, 2)) == doctest::Approx(1.0));
  CHECK(cut_norm_exact(Matrix::Zero(3, 3)) == 0.0);
  Matrix alt(2, 2);
  alt << 1, -1, -1, 1;
  CHECK(cut_norm_exact(alt) == doctest::Approx(0.25));

  std::mt19937_64 rng(1);
  for (int n : {3, 4, 5}) {
    const Matrix m = fixtures::gaussian(n, n, rng);
    CHECK(cut_norm_exact(m) == doctest::Approx(cut_norm_oracle(m)).epsilon(1e-12));
    CHECK(cut_norm_exact(m) <= m.cwiseAbs().maxCoeff() + 1e-15);
    const auto p = fixtures::random_permutation(n, rng);
    const Matrix P = permutation_matrix(p);
    CHECK(cut_norm_exact(P * m * P.transpose()) == doctest::Approx(cut_norm_exact(m)));
  }
  CHECK_THROWS(cut_norm_exact(Matrix::Ones(2, 3)));
}

TEST_CASE("low-rank bound") {
  CHECK(low_rank_bound(1.0, 4, 2) == doctest::Approx(3.0 / (2.0 * std::sqrt(2.0))));
  std::mt19937_64 rng(2);
  Matrix a = fixtures::gaussian(6, 6, rng);
  a = (a + a.transpose()).eval();
  CHECK(cut_norm_exact(a - leading_eigen_approx(a, 6)) < 1e-12);
  const auto rep = check_low_rank_bound(1.0, 4, 2, 30, 8, 3);
  CHECK(rep.trials == 30);
  CHECK(rep.passed);
}

TEST_CASE("haar orthogonal matrices") {
  std::mt19937_64 rng(3);
  for (Eigen::Index k : {1, 2, 5, 9}) {
    const Matrix q = haar_orthogonal(k, rng);
    CHECK((q.transpose() * q - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("functional shifts") {
  const auto p2 = basis_of(fixtures::path(2));
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  bool found_swap = false;
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto shift = sample_functional_shift(p2, ShiftSpec::index(2), s);
    // Every outcome is one of the four sign patterns.
    const Matrix v = p2.eigenvectors;
    const Matrix signs = v.transpose() * shift.U * v;
    CHECK(std::abs(std::abs(signs(0, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(signs(1, 1)) - 1.0) < 1e-12);
    found_swap = found_swap || (shift.U - swap).norm() < 1e-12;
  }
  CHECK(found_swap);

  std::mt19937_64 rng(4);
  const GraphSignal g = random_connected_graph(14, 0.3, 1, rng);
  const auto basis = basis_of(g);
  const auto shift = sample_functional_shift(basis, ShiftSpec::index(4), rng);
  CHECK(shift_defect(basis, shift) <= 1e-10);
  const auto vshift = sample_functional_shift(basis, ShiftSpec::value(dyadic_bands(basis.lambda_max, 0.5, 4, 3)), rng);
  CHECK(shift_defect(basis, vshift) <= 1e-10);
}

TEST_CASE("equivariance check") {
  const auto c8 = basis_of(fixtures::cycle(8));
  std::mt19937_64 rng(5);
  const Matrix x = fixtures::gaussian(8, 2, rng);
  const auto identity = check_equivariance([](const Matrix& y) { return y; }, c8, ShiftSpec::index(3), x, 10, 1);
  CHECK(identity.passed);
  CHECK(identity.worst < 1e-12);

  Vector q(c8.num_groups());
  for (auto& v : q) v = std::normal_distribution<double>()(rng);
  const Matrix Q = linear_spectral_filter(c8, q);
  const auto relu = check_equivariance([&](const Matrix& y) { return Matrix((Q * y).cwiseMax(0.0)); }, c8,
                                       ShiftSpec::index(static_cast<int>(c8.num_groups())), x, 50, 2);
  CHECK_FALSE(relu.passed);
  CHECK(relu.worst > 1e-3);
}

TEST_CASE("random geometric graphs") {
  Matrix antipodal(2, 1);
  antipodal << 0.0, std::numbers::pi;
  CHECK(geometric_graph_from_positions(Space::Circle, antipodal, 0.1).graph.adjacency.nnz() == 0);

  std::mt19937_64 rng(6);
  const Matrix pts = (fixtures::gaussian(6, 2, rng).cwiseAbs() * 1.0).cwiseMin(6.0);
  const auto full = geometric_graph_from_positions(Space::Torus2D, pts, 10.0);
  CHECK(full.graph.adjacency.nnz() == 6 * 5);

  const double r = 0.15 * 2.0 * std::numbers::pi;
  const auto g = random_geometric_graph({Space::Circle, r, Density::Uniform, 200, 7});
  const double mean_degree = weighted_degrees(g.graph.adjacency).mean();
  const double expected = 199.0 * (2.0 * r) / (2.0 * std::numbers::pi);
  CHECK(std::abs(mean_degree - expected) <= 0.15 * expected);

  Vector a(1), b(1);
  a << 0.1;
  b << 2.0 * std::numbers::pi - 0.1;
  CHECK(geodesic_distance(Space::Circle, a, b) == doctest::Approx(0.2));
  CHECK_THROWS(random_geometric_graph({Space::Circle, -1.0, Density::Uniform, 10, 0}));
}

TEST_CASE("transfer coefficients") {
  const double r = 0.3 * std::numbers::pi;
  for (std::int64_t N : {100, 200}) {
    const auto g = random_geometric_graph({Space::Circle, r, Density::Uniform, N, 8});
    const Matrix f = Matrix::Constant(N, 1, 2.0);
    const auto c = transfer_index_coefficients(g, f, {1, 2, 2});
    CHECK(c.values[0] == doctest::Approx(2.0));
    for (Eigen::Index k = 1; k < c.values.size(); ++k) CHECK(std::abs(c.values[k]) < 1e-8);
  }
  const auto g = random_geometric_graph({Space::Circle, r, Density::Uniform, 100, 9});
  const Matrix f = sample_circle_signal(g.positions, {1.0, 1.0, 0.5});
  CHECK(dist_spectral(transfer_index_coefficients(g, f, {1, 2, 2}), transfer_index_coefficients(g, f, {1, 2, 2})) ==
        0.0);
}

TEST_CASE("grid translation") {
  const auto same = grid_functional_translation(6, {1, 2}, {1, 2}, 0.3);
  CHECK((same.op - grid_translation(6, 1, 2)).norm() <= 1e-8);
  CHECK(same.equal_speed_error <= 1e-8);

  const auto identity = grid_functional_translation(6, {0, 0}, {0, 0}, 0.3);
  CHECK((identity.op - Matrix::Identity(36, 36)).norm() <= 1e-8);

  const auto mixed = grid_functional_translation(8, {1, 0}, {0, 3}, 0.3);
  CHECK(mixed.orthogonality <= 1e-8);
  CHECK(mixed.commutation <= 1e-8);
  CHECK(mixed.min_translation_distance > 0.1);

  // Brute-force distance to every circular translation.
  double best = 1e300;
  for (int dx = 0; dx < 8; ++dx)
    for (int dy = 0; dy < 8; ++dy) best = std::min(best, (mixed.op - grid_translation(8, dx, dy)).norm());
  CHECK(best == doctest::Approx(mixed.min_translation_distance));
}

TEST_CASE("suite registry") {
  const auto names = suite_names();
  CHECK(names.size() == 11);
  CHECK_THROWS_AS(run_suite("nope", 0), InvalidArgument);
  const auto r = run_suite("reconstruction", 3);
  CHECK(r.passed);
}
