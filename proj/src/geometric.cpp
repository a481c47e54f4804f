#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlsf/verify.hpp"

namespace nlsf::verify {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix(splitmix(splitmix(root ^ splitmix(a)) ^ b) ^ c);
}

double density(Density d, const Eigen::VectorXd& p) {
  if (d == Density::Uniform) return 1.0;
  double w = 1.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) w *= 1.0 + 0.5 * std::cos(p[k]);
  return w;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

}  // namespace

void MetricSpaceSpec::validate() const {
  if (!(radius > 0.0)) throw InvalidArgument("connectivity radius must be positive");
  if (N < 2) throw InvalidArgument("geometric graphs need N >= 2");
}

double geodesic_distance(Space space, const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::Index dim = space == Space::Circle ? 1 : 2;
  double sq = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    double d = std::fmod(std::abs(a[k] - b[k]), kTwoPi);
    d = std::min(d, kTwoPi - d);
    sq += d * d;
  }
  return std::sqrt(sq);
}

GeometricGraph geometric_graph_from_positions(Space space, const Matrix& positions, double radius) {
  const Eigen::Index n = positions.rows();
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (geodesic_distance(space, positions.row(i).transpose(), positions.row(j).transpose()) <= radius)
        edges.push_back({i, j, 1.0});
  GeometricGraph g;
  g.graph = make_graph(n, edges);
  g.positions = positions;
  g.connected = is_connected(g.graph.adjacency);
  return g;
}

GeometricGraph random_geometric_graph(const MetricSpaceSpec& spec) {
  spec.validate();
  const Eigen::Index dim = spec.space == Space::Circle ? 1 : 2;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::uniform_real_distribution<double> accept(0.0, 1.0);
  const double wmax = spec.density == Density::Uniform ? 1.0 : std::pow(1.5, static_cast<double>(dim));
  Matrix pos(spec.N, dim);
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    // Rejection sampling from w(x) dx.
    while (true) {
      Eigen::VectorXd p(dim);
      for (Eigen::Index k = 0; k < dim; ++k) p[k] = u(rng);
      if (accept(rng) * wmax <= density(spec.density, p)) {
        pos.row(i) = p.transpose();
        break;
      }
    }
  }
  return geometric_graph_from_positions(spec.space, pos, spec.radius);
}

Matrix sample_circle_signal(const Matrix& positions, const std::vector<double>& cos_coeffs) {
  Matrix f = Matrix::Zero(positions.rows(), 1);
  for (Eigen::Index i = 0; i < positions.rows(); ++i)
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k) f(i, 0) += cos_coeffs[k] * std::cos(k * positions(i, 0));
  return f;
}

SpectralCoefficients transfer_index_coefficients(const GeometricGraph& g, const Matrix& f, const std::vector<int>& groups) {
  const auto basis = eig::dense_eig(build_laplacian(g.graph, GsoKind::Combinatorial));
  std::vector<eig::Group> partition;
  Eigen::Index at = 0;
  for (int s : groups) {
    partition.push_back({at, at + s});
    at += s;
  }
  if (at > basis.num_pairs()) throw InvalidArgument("index partition larger than the graph");
  if (at < basis.num_pairs()) partition.push_back({at, basis.num_pairs()});
  const auto regrouped = basis.with_groups(partition);
  return analyze(Frame::index(regrouped, static_cast<int>(groups.size())), f, SignalNorm{2.0, true});
}

SpectralCoefficients transfer_value_coefficients(const GeometricGraph& g, const Matrix& f, const BankSpec& bank,
                                                 double lambda_max) {
  const auto basis = eig::dense_eig(build_laplacian(g.graph, GsoKind::Normalized));
  return analyze(Frame::value(basis, make_bank(bank, lambda_max)), f, SignalNorm{2.0, true});
}

TransferabilityReport transferability_check(const TransferabilityConfig& cfg) {
  if (cfg.sizes.size() < 2) throw InvalidArgument("transferability needs at least two sizes");
  const std::size_t pairs = cfg.sizes.size() - 1;
  std::vector<std::vector<double>> di(pairs), dv(pairs);
  for (int rep = 0; rep < cfg.reps; ++rep) {
    std::vector<SpectralCoefficients> ci, cv;
    for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
      MetricSpaceSpec spec = cfg.space;
      spec.N = cfg.sizes[k];
      GeometricGraph g;
      for (int attempt = 0;; ++attempt) {
        spec.seed = derive_seed(cfg.space.seed, rep, k, attempt);
        g = random_geometric_graph(spec);
        if (g.connected) break;
        if (attempt + 1 >= cfg.retry_budget) throw Error("geometric graph stayed disconnected after retries");
      }
      const Matrix f = sample_circle_signal(g.positions, cfg.cos_coeffs);
      ci.push_back(transfer_index_coefficients(g, f, cfg.index_groups));
      cv.push_back(transfer_value_coefficients(g, f, cfg.bank, cfg.value_lambda_max));
    }
    for (std::size_t k = 0; k < pairs; ++k) {
      di[k].push_back(dist_spectral(ci[k], ci[k + 1]));
      dv[k].push_back(dist_spectral(cv[k], cv[k + 1]));
    }
  }
  TransferabilityReport rep;
  for (std::size_t k = 0; k < pairs; ++k) {
    rep.index_medians.push_back(median(di[k]));
    rep.value_medians.push_back(median(dv[k]));
  }
  rep.index_decreasing = strictly_decreasing(rep.index_medians);
  rep.value_decreasing = strictly_decreasing(rep.value_medians);
  rep.passed = rep.index_decreasing && rep.value_decreasing;
  return rep;
}

}  // namespace nlsf::verify
