#include "nlsf/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlsf {

void BankSpec::validate() const {
  if (S < 1) throw InvalidArgument("bank S must be >= 1");
  if (K < 1 || K > S) throw InvalidArgument("bank K must satisfy 1 <= K <= S (K = " + std::to_string(K) + ")");
  if (kind == BankKind::Dyadic && !(r > 0.0 && r < 1.0)) throw InvalidArgument("dyadic ratio r must lie in (0, 1)");
}

int FilterBank::band_of(double lambda) const {
  double a = std::abs(lambda);
  const double tol = snap_tol();
  for (const Band& b : bands) {
    if (std::abs(a - b.lo) <= tol) a = b.lo;
    if (std::abs(a - b.hi) <= tol) a = b.hi;
  }
  for (int j = 0; j < K(); ++j) {
    const Band& b = bands[j];
    const bool closed_top = b.hi == lambda_max;
    if (a >= b.lo && (a < b.hi || (closed_top && a == b.hi))) return j;
  }
  return K();
}

FilterBank dyadic_bands(double lambda_max, double r, int S, int K) {
  BankSpec spec{BankKind::Dyadic, r, S, K};
  spec.validate();
  if (!(lambda_max >= 0.0)) throw InvalidArgument("lambda_max must be nonnegative");
  FilterBank bank;
  bank.spec = spec;
  bank.lambda_max = lambda_max;
  for (int j = 1; j <= K; ++j) {
    const double lo = j == 1 ? 0.0 : lambda_max * std::pow(r, S - j + 1);
    const double hi = j == S ? lambda_max : lambda_max * std::pow(r, S - j);
    bank.bands.push_back({lo, hi});
  }
  return bank;
}

FilterBank uniform_bands(double lambda_max, int S, int K) {
  BankSpec spec{BankKind::Uniform, 0.5, S, K};
  spec.validate();
  if (!(lambda_max >= 0.0)) throw InvalidArgument("lambda_max must be nonnegative");
  FilterBank bank;
  bank.spec = spec;
  bank.lambda_max = lambda_max;
  for (int j = 1; j <= K; ++j) {
    const double hi = j == S ? lambda_max : j * lambda_max / S;
    bank.bands.push_back({(j - 1) * lambda_max / S, hi});
  }
  return bank;
}

FilterBank make_bank(const BankSpec& spec, double lambda_max) {
  return spec.kind == BankKind::Dyadic ? dyadic_bands(lambda_max, spec.r, spec.S, spec.K)
                                       : uniform_bands(lambda_max, spec.S, spec.K);
}

std::vector<int> band_membership(const eig::SpectralBasis& basis, const FilterBank& bank) {
  std::vector<int> out(basis.num_pairs());
  for (Eigen::Index k = 0; k < basis.num_pairs(); ++k) out[k] = bank.band_of(basis.eigenvalues[k]);
  return out;
}

bool band_covered(const eig::SpectralBasis& basis, const FilterBank& bank, int j) {
  if (j < 0 || j >= bank.K()) throw InvalidArgument("band index out of range");
  if (basis.complete) return true;
  // The solver returns the smallest |lambda| first, so everything below the
  // largest computed value is present.
  return basis.max_computed_abs() > bank.bands[j].hi + bank.snap_tol();
}

Matrix band_vectors(const eig::SpectralBasis& basis, const FilterBank& bank, int j) {
  if (j < 0 || j >= bank.K()) throw InvalidArgument("band index " + std::to_string(j) + " out of range");
  const auto member = band_membership(basis, bank);
  Eigen::Index count = std::count(member.begin(), member.end(), j);
  Matrix v(basis.num_nodes(), count);
  Eigen::Index at = 0;
  for (Eigen::Index k = 0; k < basis.num_pairs(); ++k) {
    if (member[k] == j) v.col(at++) = basis.eigenvectors.col(k);
  }
  return v;
}

Matrix band_project(const eig::SpectralBasis& basis, const FilterBank& bank, int j, const Matrix& x) {
  if (j < 0 || j > bank.K()) {
    throw InvalidArgument("band index " + std::to_string(j) + " out of range [0, " + std::to_string(bank.K()) + "]");
  }
  if (x.rows() != basis.num_nodes()) throw DimensionError("band_project: signal row count mismatch");
  if (j < bank.K()) {
    if (!band_covered(basis, bank, j)) {
      throw CoverageError("band " + std::to_string(j) + " [" + std::to_string(bank.bands[j].lo) + ", " +
                          std::to_string(bank.bands[j].hi) + ") extends past the computed eigenvalues (max |lambda| = " +
                          std::to_string(basis.max_computed_abs()) + ")");
    }
    const Matrix v = band_vectors(basis, bank, j);
    return v * (v.transpose() * x);
  }
  Matrix rest = x;
  for (int b = 0; b < bank.K(); ++b) rest -= band_project(basis, bank, b, x);
  return rest;
}

}  // namespace nlsf
