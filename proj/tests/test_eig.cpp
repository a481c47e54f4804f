#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "helpers.hpp"
#include "nlsf/basis_cache.hpp"
#include "nlsf/eig.hpp"
#include "nlsf/error.hpp"

using namespace nlsf;
using fixtures::col;

namespace {

SparseSymMatrix lap(const GraphSignal& g) { return build_laplacian(g, GsoKind::Combinatorial); }

Matrix group_projector(const eig::SpectralBasis& b, std::size_t i) {
  const Matrix v = b.group_vectors(i);
  return v * v.transpose();
}

}  // namespace

TEST_CASE("dense eigendecomposition of P2") {
  const auto b = eig::dense_eig(lap(fixtures::path(2)));
  CHECK(b.complete);
  CHECK(b.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.eigenvalues[1] == doctest::Approx(2.0));
  // Hand oracle: eigenvectors (1,1)/sqrt2 and (1,-1)/sqrt2, up to sign.
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(b.eigenvectors.col(0).dot(Eigen::Vector2d(s, s))) == doctest::Approx(1.0));
  CHECK(std::abs(b.eigenvectors.col(1).dot(Eigen::Vector2d(s, -s))) == doctest::Approx(1.0));
  CHECK(b.lambda_max == doctest::Approx(2.0));
}

TEST_CASE("dense eigendecomposition of K3 groups the double eigenvalue") {
  const auto b = eig::dense_eig(lap(fixtures::complete(3)));
  CHECK(b.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(b.eigenvalues[2] == doctest::Approx(3.0));
  REQUIRE(b.groups.size() == 2);
  CHECK(b.groups[0] == eig::Group{0, 1});
  CHECK(b.groups[1] == eig::Group{1, 3});
}

TEST_CASE("zero matrix has one eigenspace") {
  const auto b = eig::dense_eig(Matrix::Zero(4, 4));
  CHECK(b.groups.size() == 1);
  CHECK(b.eigenvalues.norm() == 0.0);
}

TEST_CASE("grouping rule") {
  Vector a(3), c(3), d(3);
  a << 0, 3, 3;
  c << 0, 1, 2;
  d << 0, 1e-12, 5;
  CHECK(eig::group_eigenspaces(a, 1e-8).size() == 2);
  CHECK(eig::group_eigenspaces(c, 1e-8).size() == 3);
  const auto g = eig::group_eigenspaces(d, 1e-8);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == eig::Group{0, 2});
}

TEST_CASE("projections on P2") {
  const auto b = eig::dense_eig(lap(fixtures::path(2)));
  CHECK(eig::project_group(b, 0, col({1, 0})).isApprox(col({0.5, 0.5})));
  CHECK(eig::project_complement(b, 1, col({1, 0})).isApprox(col({0.5, -0.5})));
  CHECK(eig::project_complement(b, 2, col({0.3, -1.7})).norm() < 1e-14);
  CHECK_THROWS_AS(eig::project_group(b, 2, col({1, 0})), InvalidArgument);
}

TEST_CASE("projection properties") {
  std::mt19937_64 rng(3);
  const GraphSignal g = fixtures::cycle(10);
  const auto b = eig::dense_eig(lap(g));
  const Matrix x = fixtures::gaussian(10, 2, rng);
  CHECK((eig::project_group(b, 0, Matrix::Ones(10, 1)) - Matrix::Ones(10, 1)).norm() < 1e-12);
  for (std::size_t i = 0; i < b.num_groups(); ++i) {
    const Matrix p = eig::project_group(b, i, x);
    CHECK((eig::project_group(b, i, p) - p).norm() < 1e-12);
  }
  const Matrix rest = eig::project_complement(b, 3, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs((eig::project_group(b, i, x).transpose() * rest).trace()) < 1e-12);
}

TEST_CASE("projections do not depend on the basis inside an eigenspace") {
  std::mt19937_64 rng(5);
  const auto b = eig::dense_eig(lap(fixtures::cycle(8)));
  eig::SpectralBasis rotated = b;
  for (std::size_t i = 0; i < b.num_groups(); ++i) {
    const auto& gr = b.groups[i];
    if (gr.size() < 2) continue;
    const Matrix q = Eigen::HouseholderQR<Matrix>(fixtures::gaussian(gr.size(), gr.size(), rng)).householderQ();
    rotated.eigenvectors.middleCols(gr.begin, gr.size()) = b.group_vectors(i) * q;
  }
  const Matrix x = fixtures::gaussian(8, 1, rng);
  for (std::size_t i = 0; i < b.num_groups(); ++i)
    CHECK((eig::project_group(b, i, x) - eig::project_group(rotated, i, x)).norm() < 1e-10);
}

TEST_CASE("projection is permutation equivariant") {
  std::mt19937_64 rng(9);
  const GraphSignal g = fixtures::path(7, fixtures::gaussian(7, 1, rng));
  const auto perm = fixtures::random_permutation(7, rng);
  const Matrix P = permutation_matrix(perm);
  const auto b = eig::dense_eig(lap(g));
  const auto bp = eig::dense_eig(lap(permute(g, perm)));
  for (std::size_t i = 0; i < b.num_groups(); ++i)
    CHECK((eig::project_group(bp, i, P * g.features) - P * eig::project_group(b, i, g.features)).norm() < 1e-8);
}

TEST_CASE("lanczos matches the dense solver") {
  eig::EigConfig cfg;
  cfg.num_pairs = 2;
  const auto l = eig::lanczos_smallest(lap(fixtures::path(2)), cfg);
  CHECK(l.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(l.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(l.complete);

  cfg.num_pairs = 3;
  const auto c8 = eig::lanczos_smallest(lap(fixtures::cycle(8)), cfg);
  const double mu = 2.0 - std::sqrt(2.0);
  CHECK(std::abs(c8.eigenvalues[0]) < 1e-8);
  CHECK(std::abs(c8.eigenvalues[1] - mu) < 1e-8);
  CHECK(std::abs(c8.eigenvalues[2] - mu) < 1e-8);
  CHECK_FALSE(c8.complete);
  CHECK(c8.lambda_max >= 4.0);

  cfg.num_pairs = 1;
  const auto one = eig::lanczos_smallest(lap(fixtures::path(6)), cfg);
  CHECK(std::abs(one.eigenvalues[0]) < 1e-8);
  CHECK((one.eigenvectors.col(0).cwiseAbs().array() - 1.0 / std::sqrt(6.0)).abs().maxCoeff() < 1e-6);
}

TEST_CASE("lanczos agrees with dense on full decompositions") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : {10, 24, 40}) {
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < 0.2) edges.push_back({i, j, 1.0});
    const auto delta = lap(make_graph(n, edges));
    const auto d = eig::dense_eig(delta);
    eig::EigConfig cfg;
    cfg.num_pairs = n;
    cfg.seed = 4;
    const auto l = eig::lanczos_smallest(delta, cfg);
    CHECK((l.eigenvalues - d.eigenvalues).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(l.groups.size() == d.groups.size());
    for (std::size_t i = 0; i < std::min(l.groups.size(), d.groups.size()); ++i)
      CHECK((group_projector(l, i) - group_projector(d, i)).norm() < 1e-6);
    CHECK(eig::max_relative_residual(delta, l) < 1e-8);
  }
}

TEST_CASE("lanczos is deterministic and reports failure") {
  eig::EigConfig cfg;
  cfg.num_pairs = 4;
  cfg.seed = 17;
  const auto delta = lap(fixtures::cycle(30));
  const auto a = eig::lanczos_smallest(delta, cfg);
  const auto b = eig::lanczos_smallest(delta, cfg);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenvectors == b.eigenvectors);

  cfg.max_iter = 1;
  cfg.krylov_steps = 2;
  cfg.residual_tol = 1e-14;
  CHECK_THROWS_AS(eig::lanczos_smallest(lap(fixtures::cycle(200)), cfg), eig::MaxIterExceeded);
  cfg.num_pairs = 300;
  CHECK_THROWS_AS(eig::lanczos_smallest(lap(fixtures::cycle(200)), cfg), InvalidArgument);
}

TEST_CASE("power iteration estimate") {
  CHECK(eig::estimate_lambda_max(lap(fixtures::path(2)), 1) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(eig::estimate_lambda_max(lap(fixtures::complete(3)), 1) == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(eig::estimate_lambda_max(build_laplacian(fixtures::cycle(9), GsoKind::Normalized), 1) <= 2.0 + 1e-3);
  CHECK(eig::estimate_lambda_max(SparseSymMatrix::from_entries(3, {}), 1) == 0.0);
}

TEST_CASE("basis cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "nlsf_cache_test";
  std::filesystem::remove_all(dir);
  const eig::BasisCache cache(dir);
  const auto delta = lap(fixtures::cycle(6));
  int calls = 0;
  const auto compute = [&] {
    ++calls;
    return eig::dense_eig(delta);
  };
  const auto a = cache.get_or_compute(delta, "L_dense", compute);
  const auto b = cache.get_or_compute(delta, "L_dense", compute);
  CHECK(calls == 1);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenvectors == b.eigenvectors);
  CHECK(a.groups == b.groups);
  CHECK(b.complete);
  CHECK(std::filesystem::exists(cache.path_for(delta, "L_dense")));
  CHECK(cache.path_for(delta, "L_dense") != cache.path_for(lap(fixtures::cycle(7)), "L_dense"));
}
