#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "nlsf/error.hpp"
#include "nlsf/spectral.hpp"

using namespace nlsf;
using fixtures::col;

namespace {

void check_bands(const FilterBank& b, std::initializer_list<std::pair<double, double>> expected) {
  REQUIRE(b.K() == static_cast<int>(expected.size()));
  int j = 0;
  for (const auto& [lo, hi] : expected) {
    CHECK(b.bands[j].lo == doctest::Approx(lo));
    CHECK(b.bands[j].hi == doctest::Approx(hi));
    ++j;
  }
}

eig::SpectralBasis p2_basis() { return eig::dense_eig(build_laplacian(fixtures::path(2), GsoKind::Combinatorial)); }

}  // namespace

TEST_CASE("dyadic bands") {
  check_bands(dyadic_bands(2.0, 0.5, 4, 4), {{0, 0.25}, {0.25, 0.5}, {0.5, 1}, {1, 2}});
  check_bands(dyadic_bands(2.0, 0.5, 4, 2), {{0, 0.25}, {0.25, 0.5}});
  check_bands(dyadic_bands(2.0, 0.5, 1, 1), {{0, 2}});
  CHECK_THROWS_AS(dyadic_bands(2.0, 1.5, 4, 2), InvalidArgument);
  CHECK_THROWS_AS(dyadic_bands(2.0, 0.5, 4, 5), InvalidArgument);
}

TEST_CASE("uniform bands") {
  check_bands(uniform_bands(2.0, 4, 4), {{0, 0.5}, {0.5, 1}, {1, 1.5}, {1.5, 2}});
  check_bands(uniform_bands(2.0, 2, 1), {{0, 1}});
  check_bands(uniform_bands(3.0, 3, 3), {{0, 1}, {1, 2}, {2, 3}});
  CHECK_THROWS_AS(uniform_bands(2.0, 2, 0), InvalidArgument);
}

TEST_CASE("band membership: half-open edges, closed top") {
  const FilterBank b = uniform_bands(2.0, 2, 2);
  CHECK(b.band_of(0.0) == 0);
  CHECK(b.band_of(1.0) == 1);
  CHECK(b.band_of(1.0 - 1e-12) == 1);  // snapped onto the edge
  CHECK(b.band_of(2.0) == 1);
  const FilterBank partial = uniform_bands(2.0, 2, 1);
  CHECK(partial.band_of(1.5) == 1);  // complement
}

TEST_CASE("band projections on P2") {
  const auto basis = p2_basis();
  const FilterBank bank = uniform_bands(2.0, 2, 2);
  CHECK(band_project(basis, bank, 0, col({1, 0})).isApprox(col({0.5, 0.5})));
  CHECK(band_project(basis, bank, 1, col({1, 0})).isApprox(col({0.5, -0.5})));
  CHECK(band_project(basis, bank, 2, col({1, 0})).norm() < 1e-15);
  const FilterBank sparse = uniform_bands(2.0, 4, 4);
  CHECK(band_project(basis, sparse, 1, col({1, 0})).norm() == 0.0);
}

TEST_CASE("band projections partition the identity") {
  std::mt19937_64 rng(2);
  const auto basis = eig::dense_eig(build_laplacian(fixtures::cycle(11), GsoKind::Normalized));
  const FilterBank bank = dyadic_bands(basis.lambda_max, 0.5, 4, 3);
  const Matrix x = fixtures::gaussian(11, 2, rng), y = fixtures::gaussian(11, 2, rng);
  Matrix sum = Matrix::Zero(11, 2);
  for (int j = 0; j <= bank.K(); ++j) {
    const Matrix p = band_project(basis, bank, j, x);
    CHECK((band_project(basis, bank, j, p) - p).norm() < 1e-10);
    for (int i = 0; i <= bank.K(); ++i)
      if (i != j) CHECK(std::abs((band_project(basis, bank, i, y).transpose() * p).trace()) < 1e-10);
    sum += p;
  }
  CHECK((sum - x).norm() < 1e-12);
}

TEST_CASE("partial bases must cover the bands") {
  eig::EigConfig cfg;
  cfg.num_pairs = 3;
  const auto delta = build_laplacian(fixtures::cycle(12), GsoKind::Combinatorial);
  const auto partial = eig::lanczos_smallest(delta, cfg);
  const FilterBank low = dyadic_bands(partial.lambda_max, 0.5, 6, 2);
  CHECK(band_covered(partial, low, 0));
  const FilterBank wide = uniform_bands(partial.lambda_max, 2, 2);
  CHECK_FALSE(band_covered(partial, wide, 1));
  CHECK_THROWS_AS(band_project(partial, wide, 1, Matrix::Ones(12, 1)), CoverageError);
  CHECK_THROWS_AS(Frame::index(partial, static_cast<int>(partial.num_groups())), CoverageError);
}

TEST_CASE("index analysis") {
  const auto basis = p2_basis();
  const auto c = analyze_index(basis, col({1, 0}), 1);
  REQUIRE(c.values.size() == 2);
  CHECK(c.values[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
  CHECK(c.values[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));

  const auto cyc = eig::dense_eig(build_laplacian(fixtures::cycle(6), GsoKind::Combinatorial));
  const Matrix ones = Matrix::Constant(6, 1, 2.0);
  const auto k = analyze_index(cyc, ones, 2);
  CHECK(k.values[0] == doctest::Approx(ones.norm()));
  CHECK(k.values.tail(2).norm() < 1e-12);
  CHECK(analyze_index(cyc, Matrix::Zero(6, 3), 2).values.norm() == 0.0);
}

TEST_CASE("value analysis") {
  const auto c = analyze_value(p2_basis(), uniform_bands(2.0, 2, 2), col({1, 0}));
  REQUIRE(c.values.size() == 3);
  CHECK(c.values[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(c.values[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK(c.values[2] == 0.0);

  std::mt19937_64 rng(4);
  const auto basis = eig::dense_eig(build_laplacian(fixtures::cycle(9), GsoKind::Normalized));
  const Matrix x = fixtures::gaussian(9, 3, rng);
  const auto v = analyze_value(basis, dyadic_bands(basis.lambda_max, 0.5, 5, 5), x);
  CHECK(v.values.squaredNorm() == doctest::Approx(x.squaredNorm()));
}

TEST_CASE("coefficient layout is band-major") {
  std::mt19937_64 rng(8);
  const auto basis = eig::dense_eig(build_laplacian(fixtures::cycle(7), GsoKind::Combinatorial));
  const Matrix x = fixtures::gaussian(7, 2, rng);
  const auto c = analyze_index(basis, x, 2);
  CHECK(c.values.size() == 6);
  for (int j = 0; j < 2; ++j)
    for (int ch = 0; ch < 2; ++ch)
      CHECK(c.at(j, ch) == doctest::Approx(eig::project_group(basis, j, x).col(ch).norm()));
}

TEST_CASE("full synthesis") {
  const auto basis = p2_basis();
  const Matrix x = col({1, 0});
  // R = (1, 1)^T sums the two normalized projections.
  const Matrix out = synthesize_index(col({1, 1}), basis, x, 1, {1.0, 0.0});
  CHECK(out.isApprox(col({std::sqrt(2.0), 0.0})));

  const Matrix id = synthesize_index(Matrix::Identity(2, 2), basis, x, 1, {0.0, 1e-12});
  CHECK(id.col(0).isApprox(col({0.5, 0.5}), 1e-9));
  CHECK(id.col(1).isApprox(col({0.5, -0.5}), 1e-9));

  CHECK(synthesize_index(Matrix::Ones(2, 2), basis, Matrix::Zero(2, 1), 1, {1.0, 1e-6}).norm() == 0.0);
  CHECK_THROWS_AS(synthesize_index(Matrix::Ones(3, 1), basis, x, 1, {1.0, 1e-6}), DimensionError);
  CHECK_THROWS_AS(synthesize_index(col({1, 1}), basis, col({1, 1}), 1, {1.0, 0.0}), DivideByZero);

  const FilterBank whole = uniform_bands(2.0, 1, 1);
  const Matrix y = col({3, 4});
  const Matrix one = synthesize(Frame::value(basis, whole, true), Matrix::Ones(1, 1), y, {1.0, 0.0});
  CHECK(one.isApprox(y / 5.0));
  CHECK_THROWS_AS(synthesize_value(Matrix::Ones(2, 1), basis, whole, y, {1.0, 0.0}), DivideByZero);
  const Matrix scaled = synthesize_value(Matrix::Identity(2, 2), basis, whole, y, {0.0, 0.25});
  CHECK(scaled.col(0).isApprox(y / 1.25));
}

TEST_CASE("diagonal synthesis") {
  const auto basis = p2_basis();
  const Frame frame = Frame::index(basis, 1);
  Matrix r(2, 1);
  r << 1, 0;
  CHECK(synthesize_diag(frame, r, col({1, 0}), {1.0, 0.0}).isApprox(col({0.5, 0.5}) / std::sqrt(0.5)));
  CHECK(synthesize_diag(frame, Matrix::Zero(2, 1), col({1, 0}), {1.0, 1e-6}).norm() == 0.0);
  CHECK_THROWS_AS(synthesize_diag(frame, Matrix::Zero(3, 1), col({1, 0}), {1.0, 1e-6}), DimensionError);

  std::mt19937_64 rng(6);
  const auto cyc = eig::dense_eig(build_laplacian(fixtures::path(9), GsoKind::Combinatorial));
  const Frame f3 = Frame::index(cyc, 3);
  const Matrix x = fixtures::gaussian(9, 2, rng);
  CHECK((synthesize_diag(f3, block_norms(f3, x), x, {1.0, 0.0}) - x).norm() < 1e-12 * x.norm());
}

TEST_CASE("singular values of the synthesis frame") {
  std::mt19937_64 rng(12);
  const auto basis = eig::dense_eig(build_laplacian(fixtures::path(10), GsoKind::Combinatorial));
  const Frame frame = Frame::index(basis, 4);
  const Matrix x = fixtures::gaussian(10, 1, rng);
  const Matrix norms = block_norms(frame, x);
  const Vector unit = synthesis_singular_values(frame, x, {1.0, 0.0});
  CHECK((unit.array() - 1.0).abs().maxCoeff() < 1e-12);
  const Vector raw = synthesis_singular_values(frame, x, {0.0, 0.0});
  CHECK((raw - norms.col(0)).norm() < 1e-12);

  const StabilityParams sp{0.4, 0.3};
  Vector formula = synthesis_singular_values(frame, x, sp);
  Vector svd = Eigen::JacobiSVD<Matrix>(normalized_blocks(frame, x, sp)).singularValues();
  std::sort(formula.begin(), formula.end());
  std::sort(svd.begin(), svd.end());
  CHECK((formula - svd).cwiseAbs().maxCoeff() < 1e-8);

  const auto p2 = p2_basis();
  CHECK_THROWS_AS(synthesis_singular_values(Frame::index(p2, 1), col({1, 1}), {1.0, 0.0}), ZeroBlock);
}

TEST_CASE("spectral distance") {
  std::mt19937_64 rng(13);
  const GraphSignal g = fixtures::path(8, fixtures::gaussian(8, 2, rng));
  const auto basis = eig::dense_eig(build_laplacian(g, GsoKind::Combinatorial));
  const auto a = analyze_index(basis, g.features, 3);
  const auto b = analyze_index(basis, fixtures::gaussian(8, 2, rng), 3);
  const auto c = analyze_index(basis, fixtures::gaussian(8, 2, rng), 3);
  CHECK(dist_spectral(a, a) == 0.0);
  CHECK(dist_spectral(a, b) == dist_spectral(b, a));
  CHECK(dist_spectral(a, c) <= dist_spectral(a, b) + dist_spectral(b, c) + 1e-12);
  CHECK_THROWS_AS(dist_spectral(a, analyze_index(basis, g.features, 2)), InvalidArgument);

  const auto perm = fixtures::random_permutation(8, rng);
  const GraphSignal pg = permute(g, perm);
  const auto pb = eig::dense_eig(build_laplacian(pg, GsoKind::Combinatorial));
  CHECK(dist_spectral(a, analyze_index(pb, pg.features, 3)) < 1e-10);
}

TEST_CASE("analysis is non-expansive") {
  std::mt19937_64 rng(14);
  const auto basis = eig::dense_eig(build_laplacian(fixtures::cycle(10), GsoKind::Normalized));
  const FilterBank bank = dyadic_bands(basis.lambda_max, 0.5, 4, 3);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = fixtures::gaussian(10, 2, rng);
    const Matrix delta = 0.1 * fixtures::gaussian(10, 2, rng);
    const double moved = dist_spectral(analyze_value(basis, bank, x), analyze_value(basis, bank, x + delta));
    CHECK(moved <= delta.norm() + 1e-12);
  }
}

TEST_CASE("normalized signal norms") {
  const SignalNorm l1{1.0, true};
  CHECK(l1(Eigen::Vector3d(3, -3, 0)) == doctest::Approx(2.0));
  const SignalNorm l2{2.0, true};
  CHECK(l2(Eigen::Vector4d(1, 1, 1, 1)) == doctest::Approx(1.0));
  CHECK(l2.gradient(Eigen::Vector2d(0, 0)).norm() == 0.0);
}
