#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nlsf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Edge {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double w = 1.0;
};

/// Symmetric sparse matrix. Each unordered pair {i, j} is stored once
/// (i <= j); products and dense views see both triangles.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Builds from a list of upper/lower entries. Entries naming the same
  /// ordered pair are summed. If a pair is listed in both directions the two
  /// sums must agree (symmetric listing); explicit zeros are dropped.
  static SparseSymMatrix from_entries(std::int64_t n, std::span<const Edge> entries);

  std::int64_t size() const { return n_; }
  /// Upper-triangle entries (i <= j), sorted by (i, j).
  const std::vector<Edge>& entries() const { return entries_; }
  std::size_t nnz() const;

  double coeff(std::int64_t i, std::int64_t j) const;
  Matrix to_dense() const;
  const Eigen::SparseMatrix<double>& full() const { return full_; }

  /// Stable 64-bit content hash of (n, entries); used to key basis caches.
  std::uint64_t content_hash() const;

 private:
  std::int64_t n_ = 0;
  std::vector<Edge> entries_;
  Eigen::SparseMatrix<double> full_;
};

enum class GsoKind { Combinatorial, Normalized };

const char* to_string(GsoKind kind);

enum class SplitTag : std::uint8_t { None, Train, Val, Test };

/// Undirected weighted graph with a node feature matrix (n x d) and optional
/// node- or graph-level labels.
struct GraphSignal {
  SparseSymMatrix adjacency;
  Matrix features;
  std::optional<std::vector<int>> node_labels;
  std::optional<int> graph_label;
  std::optional<std::vector<SplitTag>> mask;
  bool allow_self_loops = false;

  std::int64_t num_nodes() const { return adjacency.size(); }
  /// Validates weights, self loops, and feature/label shapes; throws on violation.
  void validate() const;
};

GraphSignal make_graph(std::int64_t n, std::span<const Edge> edges, Matrix features = {});

/// L = D - A or N = D^{-1/2} L D^{-1/2}. Isolated nodes get a zero row and
/// column in N unless `strict`, in which case they raise InvalidArgument.
SparseSymMatrix build_laplacian(const GraphSignal& g, GsoKind kind, bool strict = false);

Matrix spmv(const SparseSymMatrix& m, const Matrix& x);

/// Euclidean norm of each column.
Vector channel_norms(const Matrix& x);

Vector weighted_degrees(const SparseSymMatrix& adjacency);

/// Appends a column holding each node's weighted degree.
GraphSignal add_degree_features(const GraphSignal& g);

/// Relabels nodes: node i of `g` becomes node perm[i] of the result. Labels
/// and masks move with their nodes.
GraphSignal permute(const GraphSignal& g, std::span<const std::int64_t> perm);

/// Dense permutation matrix P with (P x)[perm[i]] = x[i].
Matrix permutation_matrix(std::span<const std::int64_t> perm);

/// Disjoint union; features must have the same width.
GraphSignal disjoint_union(const GraphSignal& a, const GraphSignal& b);

bool is_connected(const SparseSymMatrix& adjacency);

}  // namespace nlsf
