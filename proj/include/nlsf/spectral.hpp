#pragma once

#include <filesystem>
#include <vector>

#include "nlsf/eig.hpp"
#include "nlsf/filterbank.hpp"

namespace nlsf {

enum class SpectralMode { Index, Value };

/// Per-channel signal norm used by analysis and synthesis normalization:
/// (sum_i |v_i|^p)^(1/p), optionally scaled by N^(-1/p).
struct SignalNorm {
  double p = 2.0;
  bool normalized = false;
  double operator()(const Eigen::Ref<const Vector>& v) const;
  /// d norm / dv; zero at v = 0.
  Vector gradient(const Eigen::Ref<const Vector>& v) const;
};

struct StabilityParams {
  double a = 1.0;
  double e = 1e-6;
  void validate() const;
};

/// The projections a transform uses: one block per retained eigenspace group
/// or band, followed by the complement block unless `leading`.
class Frame {
 public:
  static Frame index(const eig::SpectralBasis& basis, int J, bool leading = false);
  static Frame value(const eig::SpectralBasis& basis, const FilterBank& bank, bool leading = false);

  SpectralMode mode() const { return mode_; }
  /// Number of retained blocks (J or K), excluding the complement.
  int retained() const { return static_cast<int>(vectors_.size()); }
  bool has_complement() const { return complement_; }
  /// Number of blocks actually used: retained() + has_complement().
  int num_blocks() const { return retained() + (complement_ ? 1 : 0); }
  Eigen::Index num_nodes() const { return n_; }
  const Matrix& block_vectors(int j) const { return vectors_.at(j); }

  /// P_j x for block j < num_blocks(); the complement is x - sum of retained.
  Matrix project(int j, const Matrix& x) const;
  /// All block projections at once.
  std::vector<Matrix> project_all(const Matrix& x) const;
  /// Adjoint of project_all: sum_j P_j g_j.
  Matrix project_all_adjoint(const std::vector<Matrix>& g) const;

 private:
  SpectralMode mode_ = SpectralMode::Index;
  Eigen::Index n_ = 0;
  void mark_empty_complement(const eig::SpectralBasis& basis);

  std::vector<Matrix> vectors_;
  bool complement_ = true;
  bool empty_complement_ = false;
};

/// Band-major, channel-minor coefficient vector of length (B+1)*d
/// (B*d for leading frames).
struct SpectralCoefficients {
  SpectralMode mode = SpectralMode::Index;
  int B = 0;
  int d = 0;
  bool complement = true;
  Vector values;

  int rows() const { return B + (complement ? 1 : 0); }
  double at(int band, int channel) const { return values[band * d + channel]; }
  /// rows() x d view with one row per band.
  Matrix as_matrix() const;
};

/// Block norms, rows() x d.
Matrix block_norms(const Frame& frame, const Matrix& x, const SignalNorm& norm = {});

SpectralCoefficients analyze(const Frame& frame, const Matrix& x, const SignalNorm& norm = {});
SpectralCoefficients analyze_index(const eig::SpectralBasis& basis, const Matrix& x, int J, const SignalNorm& norm = {});
SpectralCoefficients analyze_value(const eig::SpectralBasis& basis, const FilterBank& bank, const Matrix& x,
                                   const SignalNorm& norm = {});

/// Gradient of <grad_coeffs, analyze(x)> with respect to x.
Matrix analyze_backward(const Frame& frame, const Matrix& x, const Vector& grad_coeffs, const SignalNorm& norm = {});

/// H = [P_1 x / (|P_1 x|^a + e) | ... ], n x (blocks * d), block-major columns.
Matrix normalized_blocks(const Frame& frame, const Matrix& x, const StabilityParams& sp, const SignalNorm& norm = {});
/// Gradient of <grad_h, normalized_blocks(x)> with respect to x.
Matrix normalized_blocks_backward(const Frame& frame, const Matrix& x, const StabilityParams& sp,
                                  const Matrix& grad_h, const SignalNorm& norm = {});

/// H R.
Matrix synthesize(const Frame& frame, const Matrix& R, const Matrix& x, const StabilityParams& sp,
                  const SignalNorm& norm = {});
Matrix synthesize_index(const Matrix& R, const eig::SpectralBasis& basis, const Matrix& x, int J,
                        const StabilityParams& sp);
Matrix synthesize_value(const Matrix& R, const eig::SpectralBasis& basis, const FilterBank& bank, const Matrix& x,
                        const StabilityParams& sp);

/// sum_j r_j (elementwise per channel) P_j x / (|P_j x|^a + e); r is blocks x d.
Matrix synthesize_diag(const Frame& frame, const Matrix& r, const Matrix& x, const StabilityParams& sp,
                       const SignalNorm& norm = {});

/// sigma_j = |P_j x| / (|P_j x|^a + e) for a one-channel signal.
Vector synthesis_singular_values(const Frame& frame, const Matrix& x, const StabilityParams& sp);

double dist_spectral(const SpectralCoefficients& a, const SpectralCoefficients& b);

/// CSV with header "band,channel,value".
void write_coefficients_csv(const std::filesystem::path& path, const SpectralCoefficients& c);

}  // namespace nlsf
