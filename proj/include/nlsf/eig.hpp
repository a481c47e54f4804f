#pragma once

#include <cstdint>
#include <vector>

#include "nlsf/error.hpp"
#include "nlsf/graph.hpp"

namespace nlsf::eig {

/// Half-open run [begin, end) of basis columns sharing one eigenvalue.
struct Group {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
  bool operator==(const Group&) const = default;
};

/// Eigenpairs of a graph shift operator, ordered by |lambda| ascending and
/// partitioned into eigenspaces.
struct SpectralBasis {
  Vector eigenvalues;
  Matrix eigenvectors;  // n x m, orthonormal columns
  std::vector<Group> groups;
  double lambda_max = 0.0;  // largest |lambda| of the full operator
  bool complete = false;    // m == n
  int iterations = 0;       // solver restarts/sweeps used

  Eigen::Index num_nodes() const { return eigenvectors.rows(); }
  Eigen::Index num_pairs() const { return eigenvectors.cols(); }
  std::size_t num_groups() const { return groups.size(); }
  /// Largest |lambda| among the computed pairs.
  double max_computed_abs() const;
  /// Columns of group i.
  auto group_vectors(std::size_t i) const {
    return eigenvectors.middleCols(groups.at(i).begin, groups.at(i).size());
  }
  /// Returns a copy whose groups are replaced by `partition` (must tile [0, m)).
  SpectralBasis with_groups(std::vector<Group> partition) const;
};

struct EigConfig {
  int num_pairs = 1;
  double residual_tol = 1e-9;
  double group_tol = 1e-8;
  int max_iter = 50;
  std::uint64_t seed = 0;
  /// Krylov steps added per restart; 0 picks max(2 * num_pairs, num_pairs + 30).
  int krylov_steps = 0;
  void validate() const;
};

constexpr Eigen::Index kDenseLimit = 4096;

/// Full symmetric eigendecomposition.
SpectralBasis dense_eig(const SparseSymMatrix& delta, double group_tol = 1e-8,
                        Eigen::Index max_n = kDenseLimit);
SpectralBasis dense_eig(const Matrix& delta, double group_tol = 1e-8);

/// Raised when the Lanczos solver cannot meet the residual tolerance; carries
/// the best partial result.
class MaxIterExceeded : public Error {
 public:
  MaxIterExceeded(const std::string& what, SpectralBasis partial, double worst_residual)
      : Error(what), partial_(std::move(partial)), worst_residual_(worst_residual) {}
  const SpectralBasis& partial() const { return partial_; }
  double worst_residual() const { return worst_residual_; }

 private:
  SpectralBasis partial_;
  double worst_residual_;
};

/// The `num_pairs` eigenpairs of smallest |lambda| of a symmetric PSD operator.
/// Restarted Lanczos with full reorthogonalization; each restart injects a
/// fresh seeded random direction so repeated eigenvalues are recovered with
/// their full multiplicity.
SpectralBasis lanczos_smallest(const SparseSymMatrix& delta, const EigConfig& cfg);

/// Consecutive eigenvalues within group_tol * max(1, |lambda_i|) share a group.
std::vector<Group> group_eigenspaces(const Vector& eigenvalues, double group_tol);

/// V_i V_i^T x for eigenspace group i.
Matrix project_group(const SpectralBasis& basis, std::size_t i, const Matrix& x);

/// x - sum_{i < J} P_i x.
Matrix project_complement(const SpectralBasis& basis, std::size_t J, const Matrix& x);

/// Power-iteration estimate of max |lambda|.
double estimate_lambda_max(const SparseSymMatrix& delta, std::uint64_t seed, int iters = 200);

/// max_k ||delta v_k - lambda_k v_k|| / max(1, |lambda_k|).
double max_relative_residual(const SparseSymMatrix& delta, const SpectralBasis& basis);

}  // namespace nlsf::eig
