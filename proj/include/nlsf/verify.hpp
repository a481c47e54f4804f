#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nlsf/eig.hpp"
#include "nlsf/filterbank.hpp"
#include "nlsf/model.hpp"
#include "nlsf/spectral.hpp"

namespace nlsf::verify {

/// Which projections a functional shift must commute with.
struct ShiftSpec {
  SpectralMode mode = SpectralMode::Index;
  int J = 0;
  FilterBank bank;

  static ShiftSpec index(int J) { return {SpectralMode::Index, J, {}}; }
  static ShiftSpec value(FilterBank bank) { return {SpectralMode::Value, 0, std::move(bank)}; }
};

struct FunctionalShift {
  Matrix U;
  /// Basis column indices of each rotated block (retained blocks, then the complement).
  std::vector<std::vector<Eigen::Index>> blocks;
};

/// Haar-distributed k x k orthogonal matrix (QR of a Gaussian matrix, R sign-fixed).
Matrix haar_orthogonal(Eigen::Index k, std::mt19937_64& rng);

std::vector<std::vector<Eigen::Index>> shift_blocks(const eig::SpectralBasis& basis, const ShiftSpec& spec);

/// U = sum_j V_j O_j V_j^T with an independent Haar O_j per block.
FunctionalShift sample_functional_shift(const eig::SpectralBasis& basis, const ShiftSpec& spec, std::mt19937_64& rng);
FunctionalShift sample_functional_shift(const eig::SpectralBasis& basis, const ShiftSpec& spec, std::uint64_t seed);

/// max(|U^T U - I|, max_j |U P_j - P_j U|) over the shift's blocks.
double shift_defect(const eig::SpectralBasis& basis, const FunctionalShift& shift);

struct EquivarianceReport {
  double worst = 0.0;
  int worst_index = -1;
  int cases = 0;
  bool passed = false;
  Matrix worst_U;
};

/// Max over sampled U of |f(Ux) - U f(x)|_F / max(1, |f(x)|_F).
EquivarianceReport check_equivariance(const std::function<Matrix(const Matrix&)>& f, const eig::SpectralBasis& basis,
                                      const ShiftSpec& spec, const Matrix& x, int num_shifts, std::uint64_t seed,
                                      double tol = 1e-7);

/// Same check on the NLSF trunk of a single-branch model.
EquivarianceReport check_equivariance(const NlsfModel& model, const GraphContext& ctx, const ShiftSpec& spec,
                                      const Matrix& x, int num_shifts, std::uint64_t seed, double tol = 1e-7);

/// sum_i q_i P_i over all eigenspaces of a complete basis.
Matrix linear_spectral_filter(const eig::SpectralBasis& basis, const Vector& q);

// Cut norm

/// (1/N^2) max over S, T of |sum_{i in S, j in T} m_ij|. Enumerates S and
/// picks T per column sign; N <= 14.
double cut_norm_exact(const Matrix& m);

struct LowRankReport {
  int trials = 0;
  int satisfied = 0;
  double fraction = 0.0;
  double bound = 0.0;
  double threshold = 0.0;
  double worst_ratio = 0.0;  // max over trials of cut norm / bound
  bool passed = false;
};

/// (3 alpha / 2) sqrt(R / J).
double low_rank_bound(double alpha, int J, int R);

/// C built from the m eigenpairs of M with largest |mu|.
Matrix leading_eigen_approx(const Matrix& m, int count);

LowRankReport check_low_rank_bound(double alpha, int J, int R, int trials, int N, std::uint64_t seed);

/// Sparse variant: M is supported on a sampled SBM graph with E nonzero
/// entries; both sides use the (N^2 / E)-scaled cut norm.
LowRankReport sparse_low_rank_bound(double alpha, int J, int R, int trials, int N, std::uint64_t seed,
                                    double p_in = 0.7, double p_out = 0.2);

// Random geometric graphs

enum class Space { Circle, Torus2D };
enum class Density { Uniform, SmoothNonuniform };

struct MetricSpaceSpec {
  Space space = Space::Circle;
  double radius = 0.1;
  Density density = Density::Uniform;
  std::int64_t N = 100;
  std::uint64_t seed = 0;
  void validate() const;
};

struct GeometricGraph {
  GraphSignal graph;
  Matrix positions;  // N x dim, coordinates in [0, 2 pi)
  bool connected = true;
};

double geodesic_distance(Space space, const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);
GeometricGraph random_geometric_graph(const MetricSpaceSpec& spec);
GeometricGraph geometric_graph_from_positions(Space space, const Matrix& positions, double radius);

struct TransferabilityConfig {
  /// Circle with connectivity radius 0.15 * 2 pi.
  MetricSpaceSpec space{Space::Circle, 0.3 * std::numbers::pi, Density::Uniform, 100, 0};
  std::vector<std::int64_t> sizes{100, 200, 400};
  int reps = 20;
  int retry_budget = 20;
  /// Index partition of the leading eigenvectors of L (sizes of consecutive groups).
  std::vector<int> index_groups{1, 2, 2};
  BankSpec bank{BankKind::Dyadic, 1.0 / 3.0, 4, 3};
  double value_lambda_max = 2.0;
  /// Circle signal coefficients: f = sum_k a_k cos(k theta).
  std::vector<double> cos_coeffs{1.0, 1.0, 0.5};
};

struct TransferabilityReport {
  std::vector<double> index_medians;  // per consecutive size pair
  std::vector<double> value_medians;
  bool index_decreasing = false;
  bool value_decreasing = false;
  bool passed = false;
};

/// Coefficients use the size-consistent norm |v| / sqrt(N).
SpectralCoefficients transfer_index_coefficients(const GeometricGraph& g, const Matrix& f, const std::vector<int>& groups);
SpectralCoefficients transfer_value_coefficients(const GeometricGraph& g, const Matrix& f, const BankSpec& bank,
                                                 double lambda_max);
Matrix sample_circle_signal(const Matrix& positions, const std::vector<double>& cos_coeffs);

TransferabilityReport transferability_check(const TransferabilityConfig& cfg);

// Functional translation on a circular grid

struct TranslationReport {
  Matrix image;        // translated M x M image
  Matrix op;           // M^2 x M^2 operator
  double equal_speed_error = 0.0;  // distance to the classical translation (equal speeds)
  double orthogonality = 0.0;
  double commutation = 0.0;  // with both band projections
  double min_translation_distance = 0.0;
};

/// Torus grid C_M x C_M. Low band: Laplacian eigenvalues below `cutoff`
/// (fraction of lambda_max); high band: the rest. Each band is shifted by
/// its own translation vector via frequency-domain modulation.
TranslationReport grid_functional_translation(int M, std::pair<int, int> t_low, std::pair<int, int> t_high,
                                              double cutoff);

/// Permutation matrix translating an M x M image by (dx, dy) circularly.
Matrix grid_translation(int M, int dx, int dy);

// Named suites

struct SuiteResult {
  std::string suite;
  int cases = 0;
  bool passed = false;
  double worst_residual = 0.0;
  std::string detail;
};

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

}  // namespace nlsf::verify
