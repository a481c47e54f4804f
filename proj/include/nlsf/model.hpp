#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "nlsf/eig.hpp"
#include "nlsf/filterbank.hpp"
#include "nlsf/nn.hpp"
#include "nlsf/spectral.hpp"

namespace nlsf {

enum class Variant { Full, Diag, LeadingFull, LeadingDiag };
enum class Task { Node, GraphLevel, Pooling };
enum class Readout { Mean, Sum, Max, LpNorm };

const char* to_string(Variant v);
const char* to_string(Task t);
const char* to_string(Readout r);

inline bool is_leading(Variant v) { return v == Variant::LeadingFull || v == Variant::LeadingDiag; }
inline bool is_diag(Variant v) { return v == Variant::Diag || v == Variant::LeadingDiag; }

/// One spectral branch: parameterization plus the GSO it is bound to.
struct BranchSpec {
  SpectralMode mode = SpectralMode::Index;
  int J = 4;
  BankSpec bank;
  GsoKind gso = GsoKind::Combinatorial;
  /// Fixed band-grid top; 0 means per-graph lambda_max.
  double lambda_max = 0.0;
};

struct NlsfConfig {
  /// Two branches enable Laplacian attention between them.
  std::vector<BranchSpec> branches{BranchSpec{}};
  Variant variant = Variant::Diag;
  int d_tilde = 0;     // synthesis channels per block for Full variants; 0 = layer input width
  int full_width = 0;  // Full variants: total synthesis output columns; 0 = blocks * d_tilde
  StabilityParams stability;
  SignalNorm norm;
  int layers = 1;
  int hidden_width = 0;  // channel width after the linear mix between layers; 0 = no mix
  std::vector<int> psi_hidden{64, 64};
  nn::Activation psi_activation = nn::Activation::ReLU;
  std::vector<int> head_hidden{64};
  nn::Activation head_activation = nn::Activation::ReLU;
  Task task = Task::Node;
  Readout readout = Readout::Mean;
  double readout_p = 1.0;
  nn::Activation pool_activation = nn::Activation::ReLU;
  int in_dim = 1;
  int num_classes = 2;
  std::size_t full_cap = 65536;

  void validate() const;
  bool attention() const { return branches.size() == 2; }
};

/// Precomputed spectral frames of one graph, one per branch.
struct GraphContext {
  std::vector<Frame> frames;
  std::vector<eig::SpectralBasis> bases;
  Eigen::Index n = 0;
};

struct ContextOptions {
  std::optional<std::filesystem::path> cache_dir;
  std::uint64_t seed = 0;
  Eigen::Index dense_limit = eig::kDenseLimit;
};

/// Builds the GSO, eigendecomposition and frame for every branch.
GraphContext prepare_context(const NlsfConfig& cfg, const GraphSignal& g, const ContextOptions& opt = {});

/// Eigendecomposition of a branch's GSO: dense when n is small enough, else
/// Lanczos with enough pairs to cover the branch.
eig::SpectralBasis compute_basis(const BranchSpec& branch, const SparseSymMatrix& delta, const ContextOptions& opt);

Frame make_frame(const BranchSpec& branch, const eig::SpectralBasis& basis, bool leading);

struct LayerTape {
  Matrix x;
  Matrix coeff;  // 1 x blocks*w
  nn::MlpTape psi;
  Matrix psi_out;
  Matrix h;
  Matrix theta;
};

struct ForwardTape {
  std::vector<std::vector<LayerTape>> branches;
  std::vector<Matrix> branch_out;  // final layer output per branch (trunk) or coefficients (graph-level)
  Matrix trunk;
  Matrix activated;
  Matrix pooled;
  nn::MlpTape graph_psi;
  Matrix graph_features;
  nn::MlpTape head;
  const GraphContext* ctx = nullptr;
};

class NlsfModel {
 public:
  NlsfModel(NlsfConfig cfg, std::uint64_t seed);

  const NlsfConfig& config() const { return cfg_; }
  int num_branches() const { return static_cast<int>(cfg_.branches.size()); }
  int blocks(int branch) const;
  int layer_in_width(int branch, int layer) const;
  int layer_out_width(int branch, int layer) const;
  int trunk_width() const;
  int coeff_width() const;

  nn::Mlp& psi(int branch, int layer) { return psi_.at(branch).at(layer); }
  Matrix& mix(int branch, int layer) { return mix_.at(branch).at(layer); }
  nn::Mlp& graph_psi() { return graph_psi_; }
  nn::Mlp& head() { return head_; }
  Matrix& attention_logits() { return att_; }
  /// Softmax of the attention logits; (1, 0) without attention.
  Eigen::Vector2d attention_weights() const;

  std::vector<nn::ParamRef> params();

  /// Node-space NLSF output before any head (attention-concatenated across
  /// branches): this is the functional-shift-equivariant part.
  Matrix trunk(const GraphContext& ctx, const Matrix& x) const;
  /// Graph-level features Psi-hat(coefficients).
  Matrix graph_features(const GraphContext& ctx, const Matrix& x) const;
  /// Readout vector of a pooling model (before the head).
  Matrix pooled(const GraphContext& ctx, const Matrix& x) const;

  /// Logits: n x C for node tasks, 1 x C for graph tasks.
  Matrix forward(const GraphContext& ctx, const Matrix& x, ForwardTape* tape = nullptr) const;
  /// Accumulates (+=) parameter gradients in params() order.
  void backward(const ForwardTape& tape, const Matrix& grad_logits, std::vector<Matrix>& grads) const;

 private:
  Matrix run_branch(int b, const Frame& frame, const Matrix& x, std::vector<LayerTape>* tape) const;
  Matrix branch_backward(int b, const Frame& frame, const std::vector<LayerTape>& tape, const Matrix& grad_out,
                         std::vector<Matrix>& grads, std::size_t& offset) const;
  Matrix combine(const std::vector<Matrix>& parts) const;

  NlsfConfig cfg_;
  std::vector<std::vector<nn::Mlp>> psi_;
  std::vector<std::vector<Matrix>> mix_;
  nn::Mlp graph_psi_;
  nn::Mlp head_;
  Matrix att_;
};

Matrix readout(Readout kind, double p, const Matrix& z);
Matrix readout_backward(Readout kind, double p, const Matrix& z, const Matrix& grad);

/// Counterexample search: a linear spectral filter Q followed by ReLU is not
/// equivariant to functional shifts.
struct SymmetryBreakWitness {
  Matrix U;
  Matrix x;
  double violation = 0.0;
  bool found = false;
  int samples = 0;
};

SymmetryBreakWitness relu_symmetry_break_witness(const eig::SpectralBasis& basis, std::uint64_t seed,
                                                 int budget = 100, double threshold = 1e-3);

}  // namespace nlsf
