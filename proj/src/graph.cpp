#include "nlsf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <string>
#include <utility>

#include "nlsf/error.hpp"

namespace nlsf {

namespace {

constexpr double kSymmetryTol = 1e-12;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < len; ++k) {
    h ^= p[k];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_entries(std::int64_t n, std::span<const Edge> entries) {
  if (n < 0) throw InvalidArgument("matrix size must be nonnegative");
  std::map<std::pair<std::int64_t, std::int64_t>, double> directed;
  for (const Edge& e : entries) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      throw InvalidArgument("entry (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                            ") out of range for n = " + std::to_string(n));
    }
    if (!std::isfinite(e.w)) throw InvalidArgument("non-finite weight");
    directed[{e.i, e.j}] += e.w;
  }

  SparseSymMatrix m;
  m.n_ = n;
  for (const auto& [key, w] : directed) {
    auto [i, j] = key;
    if (i > j) {
      // Only kept when the upper twin is absent.
      if (directed.count({j, i}) == 0 && w != 0.0) m.entries_.push_back({j, i, w});
      continue;
    }
    if (i < j) {
      auto twin = directed.find({j, i});
      if (twin != directed.end() &&
          std::abs(twin->second - w) > kSymmetryTol * std::max(1.0, std::abs(w))) {
        throw InvalidArgument("asymmetric entries for pair (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
    if (w != 0.0) m.entries_.push_back({i, j, w});
  }
  std::sort(m.entries_.begin(), m.entries_.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * m.entries_.size());
  for (const Edge& e : m.entries_) {
    trips.emplace_back(e.i, e.j, e.w);
    if (e.i != e.j) trips.emplace_back(e.j, e.i, e.w);
  }
  m.full_.resize(n, n);
  m.full_.setFromTriplets(trips.begin(), trips.end());
  m.full_.makeCompressed();
  return m;
}

std::size_t SparseSymMatrix::nnz() const { return static_cast<std::size_t>(full_.nonZeros()); }

double SparseSymMatrix::coeff(std::int64_t i, std::int64_t j) const { return full_.coeff(i, j); }

Matrix SparseSymMatrix::to_dense() const { return Matrix(full_); }

std::uint64_t SparseSymMatrix::content_hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  h = fnv1a(h, &n_, sizeof(n_));
  for (const Edge& e : entries_) {
    h = fnv1a(h, &e.i, sizeof(e.i));
    h = fnv1a(h, &e.j, sizeof(e.j));
    h = fnv1a(h, &e.w, sizeof(e.w));
  }
  return h;
}

const char* to_string(GsoKind kind) {
  switch (kind) {
    case GsoKind::Combinatorial:
      return "combinatorial";
    case GsoKind::Normalized:
      return "normalized";
  }
  return "?";
}

void GraphSignal::validate() const {
  const auto n = num_nodes();
  for (const Edge& e : adjacency.entries()) {
    if (e.w < 0.0) throw InvalidArgument("negative edge weight on (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    if (e.i == e.j && !allow_self_loops) throw InvalidArgument("self loop on node " + std::to_string(e.i));
  }
  if (features.rows() != n) {
    throw DimensionError("feature matrix has " + std::to_string(features.rows()) + " rows, graph has " +
                         std::to_string(n) + " nodes");
  }
  if (node_labels && static_cast<std::int64_t>(node_labels->size()) != n) {
    throw DimensionError("label vector length does not match node count");
  }
  if (mask && static_cast<std::int64_t>(mask->size()) != n) {
    throw DimensionError("mask length does not match node count");
  }
}

GraphSignal make_graph(std::int64_t n, std::span<const Edge> edges, Matrix features) {
  GraphSignal g;
  g.adjacency = SparseSymMatrix::from_entries(n, edges);
  g.features = features.size() == 0 && features.rows() == 0 ? Matrix(n, 0) : std::move(features);
  g.validate();
  return g;
}

Vector weighted_degrees(const SparseSymMatrix& adjacency) {
  Vector deg = Vector::Zero(adjacency.size());
  for (const Edge& e : adjacency.entries()) {
    deg[e.i] += e.w;
    if (e.i != e.j) deg[e.j] += e.w;
  }
  return deg;
}

SparseSymMatrix build_laplacian(const GraphSignal& g, GsoKind kind, bool strict) {
  const auto n = g.num_nodes();
  const Vector deg = weighted_degrees(g.adjacency);
  std::vector<Edge> out;
  out.reserve(g.adjacency.entries().size() + n);

  Vector inv_sqrt = Vector::Zero(n);
  if (kind == GsoKind::Normalized) {
    for (std::int64_t i = 0; i < n; ++i) {
      if (deg[i] > 0.0) {
        inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
      } else if (strict) {
        throw InvalidArgument("node " + std::to_string(i) + " has zero degree (strict normalized Laplacian)");
      }
    }
  }

  // Diagonal first: L_ii = d_i - a_ii.
  std::vector<double> diag(deg.data(), deg.data() + n);
  for (const Edge& e : g.adjacency.entries()) {
    if (e.i == e.j) diag[e.i] -= e.w;
  }
  for (std::int64_t i = 0; i < n; ++i) {
    double v = diag[i];
    if (kind == GsoKind::Normalized) v *= inv_sqrt[i] * inv_sqrt[i];
    out.push_back({i, i, v});
  }
  for (const Edge& e : g.adjacency.entries()) {
    if (e.i == e.j) continue;
    double v = -e.w;
    if (kind == GsoKind::Normalized) v *= inv_sqrt[e.i] * inv_sqrt[e.j];
    out.push_back({e.i, e.j, v});
  }
  return SparseSymMatrix::from_entries(n, out);
}

Matrix spmv(const SparseSymMatrix& m, const Matrix& x) {
  if (x.rows() != m.size()) {
    throw DimensionError("spmv: matrix is " + std::to_string(m.size()) + "x" + std::to_string(m.size()) +
                         ", signal has " + std::to_string(x.rows()) + " rows");
  }
  return m.full() * x;
}

Vector channel_norms(const Matrix& x) { return x.colwise().norm().transpose(); }

GraphSignal add_degree_features(const GraphSignal& g) {
  GraphSignal out = g;
  const auto n = g.num_nodes();
  Matrix f(n, g.features.cols() + 1);
  if (g.features.cols() > 0) f.leftCols(g.features.cols()) = g.features;
  f.col(g.features.cols()) = weighted_degrees(g.adjacency);
  out.features = std::move(f);
  return out;
}

GraphSignal permute(const GraphSignal& g, std::span<const std::int64_t> perm) {
  const auto n = g.num_nodes();
  if (static_cast<std::int64_t>(perm.size()) != n) throw DimensionError("permutation length mismatch");
  std::vector<Edge> edges;
  for (const Edge& e : g.adjacency.entries()) edges.push_back({perm[e.i], perm[e.j], e.w});
  GraphSignal out;
  out.allow_self_loops = g.allow_self_loops;
  out.adjacency = SparseSymMatrix::from_entries(n, edges);
  out.features = Matrix(n, g.features.cols());
  for (std::int64_t i = 0; i < n; ++i) out.features.row(perm[i]) = g.features.row(i);
  if (g.node_labels) {
    std::vector<int> lab(n);
    for (std::int64_t i = 0; i < n; ++i) lab[perm[i]] = (*g.node_labels)[i];
    out.node_labels = std::move(lab);
  }
  if (g.mask) {
    std::vector<SplitTag> m(n);
    for (std::int64_t i = 0; i < n; ++i) m[perm[i]] = (*g.mask)[i];
    out.mask = std::move(m);
  }
  out.graph_label = g.graph_label;
  return out;
}

Matrix permutation_matrix(std::span<const std::int64_t> perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(perm[i], i) = 1.0;
  return p;
}

GraphSignal disjoint_union(const GraphSignal& a, const GraphSignal& b) {
  if (a.features.cols() != b.features.cols()) throw DimensionError("disjoint_union: feature widths differ");
  const auto na = a.num_nodes();
  const auto n = na + b.num_nodes();
  std::vector<Edge> edges(a.adjacency.entries().begin(), a.adjacency.entries().end());
  for (const Edge& e : b.adjacency.entries()) edges.push_back({e.i + na, e.j + na, e.w});
  GraphSignal out;
  out.adjacency = SparseSymMatrix::from_entries(n, edges);
  out.features = Matrix(n, a.features.cols());
  out.features.topRows(na) = a.features;
  out.features.bottomRows(b.num_nodes()) = b.features;
  return out;
}

bool is_connected(const SparseSymMatrix& adjacency) {
  const auto n = adjacency.size();
  if (n <= 1) return true;
  const auto& a = adjacency.full();
  std::vector<char> seen(n, 0);
  std::queue<std::int64_t> q;
  q.push(0);
  seen[0] = 1;
  std::int64_t count = 1;
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, u); it; ++it) {
      if (!seen[it.row()]) {
        seen[it.row()] = 1;
        ++count;
        q.push(it.row());
      }
    }
  }
  return count == n;
}

}  // namespace nlsf
