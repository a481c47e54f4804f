#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/SVD>

#include "nlsf/datasets.hpp"
#include "nlsf/verify.hpp"

namespace nlsf::verify {

namespace {

struct Fixture {
  GraphSignal g;
  eig::SpectralBasis basis;
};

Fixture random_fixture(std::mt19937_64& rng, GsoKind gso, int d) {
  std::uniform_int_distribution<int> size(6, 32);
  Fixture f;
  f.g = random_connected_graph(size(rng), 0.25, d, rng);
  f.basis = eig::dense_eig(build_laplacian(f.g, gso));
  return f;
}

FilterBank default_bank(const eig::SpectralBasis& basis) {
  return make_bank({BankKind::Dyadic, 0.5, 4, 3}, basis.lambda_max);
}

Matrix gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix x(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  return x;
}

Vector ctx_coeffs(const NlsfConfig& cfg, const GraphSignal& g) {
  return analyze(prepare_context(cfg, g).frames.at(0), g.features, cfg.norm).values;
}

bool all_blocks_nonzero(const Frame& frame, const Matrix& x) {
  return (block_norms(frame, x).array() > 0.0).all();
}

SuiteResult equivariance(std::uint64_t seed) {
  SuiteResult r{"equivariance", 0, true, 0.0, ""};
  std::mt19937_64 rng(seed);
  int controls = 0;
  for (int k = 0; k < 10; ++k) {
    const int d = k % 2 == 0 ? 1 : 3;
    for (const SpectralMode mode : {SpectralMode::Index, SpectralMode::Value}) {
      NlsfConfig cfg;
      BranchSpec br;
      br.mode = mode;
      br.gso = mode == SpectralMode::Index ? GsoKind::Combinatorial : GsoKind::Normalized;
      br.J = 3;
      br.bank = {BankKind::Dyadic, 0.5, 4, 3};
      cfg.branches = {br};
      cfg.variant = k % 4 < 2 ? Variant::Diag : Variant::Full;
      cfg.layers = 2;
      cfg.hidden_width = 2;
      cfg.psi_hidden = {16};
      cfg.in_dim = d;
      std::uniform_int_distribution<int> size(6, 32);
      const GraphSignal g = random_connected_graph(size(rng), 0.25, d, rng);
      const GraphContext ctx = prepare_context(cfg, g);
      const NlsfModel model(cfg, rng());
      const auto& basis = ctx.bases[0];
      const ShiftSpec spec = mode == SpectralMode::Index ? ShiftSpec::index(std::min<int>(3, basis.num_groups()))
                                                         : ShiftSpec::value(make_bank(br.bank, basis.lambda_max));
      const auto rep = check_equivariance(model, ctx, spec, g.features, 50, rng());
      r.cases += rep.cases;
      r.worst_residual = std::max(r.worst_residual, rep.worst);
      r.passed = r.passed && rep.passed;
      if (mode == SpectralMode::Index && basis.num_groups() >= 2) {
        const auto w = relu_symmetry_break_witness(basis, rng());
        controls += w.found ? 1 : 0;
        r.passed = r.passed && w.found;
      }
    }
  }
  r.detail = "relu controls found: " + std::to_string(controls);
  return r;
}

SuiteResult reconstruction(std::uint64_t seed) {
  SuiteResult r{"reconstruction", 0, true, 0.0, ""};
  std::mt19937_64 rng(seed);
  const StabilityParams sp{1.0, 0.0};
  while (r.cases < 100) {
    const bool value = r.cases % 2 == 1;
    const Fixture f = random_fixture(rng, value ? GsoKind::Normalized : GsoKind::Combinatorial, 1 + r.cases % 3);
    const int J = std::max<int>(1, static_cast<int>(f.basis.num_groups()) - 2);
    const Frame frame = value ? Frame::value(f.basis, default_bank(f.basis)) : Frame::index(f.basis, J);
    if (!all_blocks_nonzero(frame, f.g.features)) continue;
    const Matrix coeff = block_norms(frame, f.g.features);
    const Matrix out = synthesize_diag(frame, coeff, f.g.features, sp);
    const double err = (out - f.g.features).norm() / f.g.features.norm();
    r.worst_residual = std::max(r.worst_residual, err);
    ++r.cases;
  }
  r.passed = r.worst_residual <= 1e-8;
  return r;
}

SuiteResult invertibility(std::uint64_t seed) {
  SuiteResult r{"invertibility", 0, true, 0.0, ""};
  std::mt19937_64 rng(seed);
  double unit_dev = 0.0;
  while (r.cases < 50) {
    const Fixture f = random_fixture(rng, GsoKind::Combinatorial, 1);
    const int J = std::max<int>(1, static_cast<int>(f.basis.num_groups()) - 2);
    const Frame frame = Frame::index(f.basis, J);
    if (!all_blocks_nonzero(frame, f.g.features)) continue;
    for (const StabilityParams sp : {StabilityParams{0.5, 0.1}, StabilityParams{1.0, 0.0}}) {
      Vector formula = synthesis_singular_values(frame, f.g.features, sp);
      const Matrix H = normalized_blocks(frame, f.g.features, sp);
      Vector svd = Eigen::JacobiSVD<Matrix>(H).singularValues();
      std::sort(formula.begin(), formula.end());
      std::sort(svd.begin(), svd.end());
      r.worst_residual = std::max(r.worst_residual, (formula - svd).cwiseAbs().maxCoeff());
      if (sp.e == 0.0) unit_dev = std::max(unit_dev, (formula.array() - 1.0).abs().maxCoeff());
    }
    ++r.cases;
  }
  r.passed = r.worst_residual <= 1e-8 && unit_dev <= 1e-10;
  r.detail = "max |sigma - 1| at a=1, e=0: " + std::to_string(unit_dev);
  return r;
}

SuiteResult lin_comm(std::uint64_t seed) {
  SuiteResult r{"lin_comm", 0, true, 0.0, ""};
  std::mt19937_64 rng(seed);
  int failures_found = 0, graphs = 0;
  for (int k = 0; k < 5; ++k) {
    const Fixture f = random_fixture(rng, GsoKind::Combinatorial, 1);
    const Eigen::Index n = f.basis.num_nodes();
    const int J = std::min<int>(3, f.basis.num_groups());
    const Frame frame = Frame::index(f.basis, J);
    // Linear response: fixed coefficients, no normalization.
    const Matrix resp = gaussian(frame.num_blocks(), 1, rng);
    Matrix A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      A.col(i) = synthesize_diag(frame, resp, Matrix::Identity(n, n).col(i), {0.0, 0.0});
    }
    const Matrix G = gaussian(n, n, rng);
    const auto spec = ShiftSpec::index(J);
    double worst_random = 0.0;
    for (int s = 0; s < 100; ++s) {
      const Matrix U = sample_functional_shift(f.basis, spec, rng).U;
      r.worst_residual = std::max(r.worst_residual, (A * U - U * A).norm() / std::max(1.0, A.norm()));
      worst_random = std::max(worst_random, (G * U - U * G).norm() / std::max(1.0, G.norm()));
      ++r.cases;
    }
    if (f.basis.num_groups() >= 2) {
      ++graphs;
      if (worst_random > 1e-3) ++failures_found;
    }
  }
  r.passed = r.worst_residual <= 1e-8 && failures_found == graphs;
  r.detail = "random operators failing commutation: " + std::to_string(failures_found) + "/" + std::to_string(graphs);
  return r;
}

SuiteResult expressivity(std::uint64_t seed) {
  SuiteResult r{"expressivity", 2, true, 0.0, ""};
  const std::vector<Edge> e2{{0, 1, 1.0}};
  const std::vector<Edge> e3{{0, 1, 1.0}, {1, 2, 1.0}};
  Matrix x2(2, 1), x3(3, 1);
  x2 << 2.0, 0.0;
  x3 << 2.5, 1.0, -0.5;
  const GraphSignal g2 = make_graph(2, e2, x2);
  const GraphSignal g3 = make_graph(3, e3, x3);

  NlsfConfig cfg;
  cfg.branches = {BranchSpec{SpectralMode::Index, 2, {}, GsoKind::Combinatorial, 0.0}};
  cfg.norm = {1.0, true};
  cfg.in_dim = 1;
  cfg.task = Task::GraphLevel;
  const auto c2 = ctx_coeffs(cfg, g2);
  const auto c3 = ctx_coeffs(cfg, g3);
  Vector expected(3);
  expected << 1.0, 1.0, 0.0;
  r.worst_residual = std::max((c2 - expected).cwiseAbs().maxCoeff(), (c3 - expected).cwiseAbs().maxCoeff());

  const NlsfModel graph_model(cfg, seed);
  const double graph_gap =
      (graph_model.forward(prepare_context(cfg, g2), x2) - graph_model.forward(prepare_context(cfg, g3), x3)).norm();

  cfg.task = Task::Pooling;
  cfg.variant = Variant::Diag;
  cfg.psi_hidden = {};
  cfg.pool_activation = nn::Activation::Identity;
  cfg.readout = Readout::LpNorm;
  cfg.readout_p = 1.0;
  NlsfModel pool(cfg, seed);
  pool.psi(0, 0).weight(0).setIdentity();
  pool.psi(0, 0).bias(0).setConstant(cfg.stability.e);
  const double p2 = pool.pooled(prepare_context(cfg, g2), x2)(0, 0);
  const double p3 = pool.pooled(prepare_context(cfg, g3), x3)(0, 0);
  const double pool_err = std::max(std::abs(p2 - 1.0), std::abs(p3 - 4.0 / 3.0));
  r.worst_residual = std::max({r.worst_residual, graph_gap, pool_err});
  r.passed = r.worst_residual <= 1e-12;
  std::ostringstream os;
  os.precision(17);
  os << "pooled: " << p2 << " vs " << p3;
  r.detail = os.str();
  return r;
}

SuiteResult low_rank(std::uint64_t seed) {
  const auto rep = check_low_rank_bound(1.0, 4, 2, 200, 10, seed);
  return {"low_rank", rep.trials, rep.passed, rep.worst_ratio,
          "fraction " + std::to_string(rep.fraction) + " threshold " + std::to_string(rep.threshold)};
}

SuiteResult sparse_low_rank(std::uint64_t seed) {
  const auto rep = sparse_low_rank_bound(1.0, 4, 2, 100, 12, seed);
  return {"sparse_low_rank", rep.trials, rep.passed, rep.worst_ratio,
          "fraction " + std::to_string(rep.fraction) + " threshold " + std::to_string(rep.threshold)};
}

SuiteResult transferability(std::uint64_t seed) {
  TransferabilityConfig cfg;
  cfg.space.seed = seed;
  const auto rep = transferability_check(cfg);
  std::ostringstream os;
  os << "index medians:";
  for (double v : rep.index_medians) os << ' ' << v;
  os << "; value medians:";
  for (double v : rep.value_medians) os << ' ' << v;
  const int cases = static_cast<int>(cfg.sizes.size()) * cfg.reps;
  const double last = rep.index_medians.empty() ? 0.0 : rep.index_medians.back();
  return {"transferability", cases, rep.passed, last, os.str()};
}

SuiteResult translation(std::uint64_t) {
  SuiteResult r{"translation", 2, true, 0.0, ""};
  const auto same = grid_functional_translation(8, {2, 1}, {2, 1}, 0.3);
  const auto diff = grid_functional_translation(8, {1, 0}, {0, 2}, 0.3);
  r.worst_residual = std::max({same.equal_speed_error, diff.commutation, diff.orthogonality});
  r.passed = same.equal_speed_error <= 1e-8 && diff.commutation <= 1e-10 && diff.orthogonality <= 1e-10 &&
             diff.min_translation_distance > 0.1;
  r.detail = "min distance to a classical translation: " + std::to_string(diff.min_translation_distance);
  return r;
}

SuiteResult symmetry_break(std::uint64_t seed) {
  std::vector<Edge> edges;
  for (int i = 0; i < 8; ++i) edges.push_back({i, (i + 1) % 8, 1.0});
  const GraphSignal c8 = make_graph(8, edges);
  const auto basis = eig::dense_eig(build_laplacian(c8, GsoKind::Combinatorial));
  const auto w = relu_symmetry_break_witness(basis, seed);
  return {"symmetry_break", w.samples, w.found, w.violation, "samples used: " + std::to_string(w.samples)};
}

SuiteResult gradients(std::uint64_t seed) {
  SuiteResult r{"gradients", 0, true, 0.0, ""};
  std::mt19937_64 rng(seed);
  const GraphSignal g = random_connected_graph(9, 0.3, 2, rng);
  std::vector<int> labels(g.num_nodes());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);

  std::vector<NlsfConfig> configs;
  NlsfConfig base;
  base.in_dim = 2;
  base.num_classes = 3;
  base.psi_hidden = {5};
  base.head_hidden = {4};
  base.psi_activation = nn::Activation::Tanh;
  base.head_activation = nn::Activation::Tanh;
  base.pool_activation = nn::Activation::Tanh;
  base.branches = {BranchSpec{SpectralMode::Index, 2, {}, GsoKind::Combinatorial, 0.0}};
  const BranchSpec value{SpectralMode::Value, 0, {BankKind::Uniform, 0.5, 3, 3}, GsoKind::Normalized, 0.0};
  for (Variant v : {Variant::Diag, Variant::Full, Variant::LeadingDiag, Variant::LeadingFull}) {
    NlsfConfig c = base;
    c.variant = v;
    configs.push_back(c);
  }
  {
    NlsfConfig c = base;
    c.branches = {value};
    c.variant = Variant::Full;
    c.d_tilde = 2;
    c.layers = 2;
    c.hidden_width = 3;
    configs.push_back(c);
  }
  {
    NlsfConfig c = base;
    c.branches = {base.branches[0], value};
    configs.push_back(c);
  }
  for (Readout ro : {Readout::Mean, Readout::Max, Readout::LpNorm}) {
    NlsfConfig c = base;
    c.task = Task::Pooling;
    c.readout = ro;
    c.readout_p = 3.0;
    configs.push_back(c);
  }
  {
    NlsfConfig c = base;
    c.task = Task::GraphLevel;
    c.branches = {base.branches[0], value};
    configs.push_back(c);
  }

  for (const auto& cfg : configs) {
    NlsfModel model(cfg, rng());
    if (cfg.attention()) model.attention_logits() << 0.3, -0.2;
    const GraphContext ctx = prepare_context(cfg, g);
    const bool node = cfg.task == Task::Node;
    const std::vector<int> targets = node ? labels : std::vector<int>{1};
    auto params = model.params();
    ForwardTape tape;
    const Matrix logits = model.forward(ctx, g.features, &tape);
    auto grads = nn::zeros_like(params);
    model.backward(tape, nn::cross_entropy(logits, targets).grad, grads);
    const double err = nn::gradcheck(
        [&] { return nn::cross_entropy(model.forward(ctx, g.features), targets).loss; }, params, grads);
    r.worst_residual = std::max(r.worst_residual, err);
    ++r.cases;
  }
  r.passed = r.worst_residual <= 1e-4;
  return r;
}

using SuiteFn = SuiteResult (*)(std::uint64_t);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"equivariance", equivariance},     {"reconstruction", reconstruction},
      {"invertibility", invertibility},   {"lin_comm", lin_comm},
      {"expressivity", expressivity},     {"low_rank", low_rank},
      {"sparse_low_rank", sparse_low_rank}, {"transferability", transferability},
      {"translation", translation},       {"symmetry_break", symmetry_break},
      {"gradients", gradients},
  };
  return suites;
}

}  // namespace

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  for (const auto& [n, fn] : registry())
    if (n == name) return fn(seed);
  throw InvalidArgument("unknown suite '" + name + "'");
}

}  // namespace nlsf::verify
