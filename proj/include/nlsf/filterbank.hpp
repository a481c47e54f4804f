#pragma once

#include <string>
#include <vector>

#include "nlsf/eig.hpp"

namespace nlsf {

enum class BankKind { Dyadic, Uniform };

struct BankSpec {
  BankKind kind = BankKind::Dyadic;
  double r = 0.5;  // dyadic ratio
  int S = 4;
  int K = 4;
  void validate() const;
};

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// K indicator bands over [0, lambda_max] plus the implicit complement band
/// (index K) holding whatever the retained bands leave out.
struct FilterBank {
  BankSpec spec;
  double lambda_max = 0.0;
  std::vector<Band> bands;

  int K() const { return static_cast<int>(bands.size()); }
  /// Snap tolerance used when assigning eigenvalues that sit on a band edge.
  double snap_tol() const { return 1e-9 * lambda_max; }
  /// Band index in [0, K] for eigenvalue magnitude |lambda|; K means complement.
  int band_of(double lambda) const;
};

FilterBank dyadic_bands(double lambda_max, double r, int S, int K);
FilterBank uniform_bands(double lambda_max, int S, int K);
FilterBank make_bank(const BankSpec& spec, double lambda_max);

/// Band index of every basis column.
std::vector<int> band_membership(const eig::SpectralBasis& basis, const FilterBank& bank);

/// True when every eigenvalue of band j (< K) is represented in the basis.
bool band_covered(const eig::SpectralBasis& basis, const FilterBank& bank, int j);

/// Columns of the basis that fall in band j (< K).
Matrix band_vectors(const eig::SpectralBasis& basis, const FilterBank& bank, int j);

/// g_j(Delta) x. j = K selects the complement x - sum_{j<K} g_j x.
Matrix band_project(const eig::SpectralBasis& basis, const FilterBank& bank, int j, const Matrix& x);

}  // namespace nlsf
