#include "nlsf/datasets.hpp"

#include <set>

#include "nlsf/error.hpp"

namespace nlsf {

namespace {

Matrix gaussian(std::int64_t n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = normal(rng);
  return x;
}

}  // namespace

GraphSignal make_sbm(const SbmSpec& spec) {
  if (spec.block_size < 1 || spec.feature_dim < 1) throw InvalidArgument("SBM needs positive block size and features");
  if (!(spec.p_in >= 0.0 && spec.p_in <= 1.0 && spec.p_out >= 0.0 && spec.p_out <= 1.0)) {
    throw InvalidArgument("SBM probabilities must lie in [0, 1]");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::int64_t n = 2 * static_cast<std::int64_t>(spec.block_size);
  std::vector<Edge> edges;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      const bool same = (i < spec.block_size) == (j < spec.block_size);
      if (u(rng) < (same ? spec.p_in : spec.p_out)) edges.push_back({i, j, 1.0});
    }
  }
  GraphSignal g = make_graph(n, edges, gaussian(n, spec.feature_dim, rng));
  std::vector<int> labels(n);
  for (std::int64_t i = 0; i < n; ++i) labels[i] = i < spec.block_size ? 0 : 1;
  g.node_labels = std::move(labels);
  return g;
}

std::vector<GraphSignal> make_cycle_vs_path(int count, int n_min, int n_max, std::uint64_t seed) {
  if (count < 1 || n_min < 3 || n_max < n_min) throw InvalidArgument("cycle/path sizes need 3 <= n_min <= n_max");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(n_min, n_max);
  std::vector<GraphSignal> out;
  for (int k = 0; k < count; ++k) {
    const int n = size(rng);
    const int label = k % 2;
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
    if (label == 0) edges.push_back({n - 1, 0, 1.0});
    GraphSignal g = add_degree_features(make_graph(n, edges));
    g.graph_label = label;
    out.push_back(std::move(g));
  }
  return out;
}

GraphSignal random_connected_graph(std::int64_t n, double p, int d, std::mt19937_64& rng) {
  if (n < 1 || d < 1) throw InvalidArgument("random graph needs n >= 1 and d >= 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::set<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::int64_t i = 1; i < n; ++i) {
    const auto j = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(i));
    pairs.insert({j, i});
  }
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j)
      if (u(rng) < p) pairs.insert({i, j});
  std::vector<Edge> edges;
  for (const auto& [i, j] : pairs) edges.push_back({i, j, 1.0});
  return make_graph(n, edges, gaussian(n, d, rng));
}

}  // namespace nlsf
