#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nlsf/basis_cache.hpp"
#include "nlsf/config.hpp"
#include "nlsf/io.hpp"
#include "nlsf/verify.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string cache_dir;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Root seed");
  app->add_option("--workers", c.workers, "Worker threads (default: available cores)")->check(CLI::PositiveNumber);
  app->add_option("--cache-dir", c.cache_dir, "Eigendecomposition cache directory");
  app->add_option("--out", c.out, "Output path");
}

void apply_common(nlsf::RunConfig& cfg, const Common& c) {
  if (c.seed) cfg.seed = *c.seed;
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  cfg.train.workers = c.workers ? *c.workers : static_cast<int>(cores);
  if (!c.cache_dir.empty()) cfg.cache_dir = c.cache_dir;
  if (!c.out.empty()) cfg.out = c.out;
}

nlsf::RunConfig config_for(const Common& c, nlsf::RunTask task) {
  nlsf::RunConfig cfg;
  if (!c.config.empty()) {
    cfg = nlsf::load_run_config(c.config);
    if (cfg.task != task) {
      throw nlsf::ConfigError(c.config + ": field 'task' is '" + nlsf::to_string(cfg.task) + "' but this command runs '" +
                              nlsf::to_string(task) + "'");
    }
  } else {
    cfg.task = task;
    if (task == nlsf::RunTask::Verify) cfg.suites = nlsf::verify::suite_names();
  }
  apply_common(cfg, c);
  return cfg;
}

nlsf::GraphSignal load_graph(const std::string& edges, const std::string& features) {
  nlsf::io::NodeDatasetPaths p;
  p.edges = edges;
  if (!features.empty()) p.features = features;
  p.degree_features = features.empty();
  return nlsf::io::load_node_dataset(p);
}

nlsf::GsoKind gso_from(const std::string& s) { return s == "N" ? nlsf::GsoKind::Normalized : nlsf::GsoKind::Combinatorial; }

std::ostream& sink(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw nlsf::Error("cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear spectral filters for graph learning"};
  app.require_subcommand(1);

  Common common;
  std::string edges, features, gso = "L", mode = "index", bank_kind = "dyadic";
  int pairs = 0, J = 4, S = 4, K = 3;
  double r = 0.5;
  std::vector<std::string> suites;
  nlsf::DemoConfig demo;
  std::vector<int> t_low{demo.t_low.first, demo.t_low.second}, t_high{demo.t_high.first, demo.t_high.second};

  auto* eig_cmd = app.add_subcommand("eig", "Eigendecomposition of a graph shift operator");
  add_common(eig_cmd, common, false);
  eig_cmd->add_option("--edges", edges, "Edge list file")->required()->check(CLI::ExistingFile);
  eig_cmd->add_option("--gso", gso, "L (combinatorial) or N (normalized)")->check(CLI::IsMember({"L", "N"}));
  eig_cmd->add_option("--pairs", pairs, "Smallest pairs via Lanczos (0: dense, all pairs)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Spectral analysis coefficients of a graph signal");
  add_common(analyze_cmd, common, false);
  analyze_cmd->add_option("--edges", edges, "Edge list file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--features", features, "Feature CSV (default: degree feature)")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--gso", gso, "L or N")->check(CLI::IsMember({"L", "N"}));
  analyze_cmd->add_option("--mode", mode, "index or value")->check(CLI::IsMember({"index", "value"}));
  analyze_cmd->add_option("--J", J, "Eigenspaces kept in index mode")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--bank", bank_kind, "dyadic or uniform")->check(CLI::IsMember({"dyadic", "uniform"}));
  analyze_cmd->add_option("--r", r, "Dyadic ratio");
  analyze_cmd->add_option("--S", S, "Bands in the full grid");
  analyze_cmd->add_option("--K", K, "Bands kept");

  auto* node_cmd = app.add_subcommand("train-node", "Semi-supervised node classification");
  add_common(node_cmd, common, true);
  node_cmd->get_option("--config")->required();
  auto* graph_cmd = app.add_subcommand("train-graph", "Graph classification");
  add_common(graph_cmd, common, true);
  graph_cmd->get_option("--config")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Run property and oracle suites");
  add_common(verify_cmd, common, true);
  verify_cmd->add_option("--suite", suites, "Suite name (repeatable; default: all)");

  auto* demo_cmd = app.add_subcommand("demo-translation", "Functional translation on a circular grid");
  add_common(demo_cmd, common, true);
  demo_cmd->add_option("--M", demo.M, "Grid side");
  demo_cmd->add_option("--t-low", t_low, "Low-band shift (dx dy)")->expected(2);
  demo_cmd->add_option("--t-high", t_high, "High-band shift (dx dy)")->expected(2);
  demo_cmd->add_option("--cutoff", demo.cutoff, "Band split as a fraction of lambda_max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(eig_cmd)) {
      const auto g = load_graph(edges, "");
      const auto delta = nlsf::build_laplacian(g, gso_from(gso));
      nlsf::eig::SpectralBasis basis;
      const auto compute = [&] {
        if (pairs <= 0) return nlsf::eig::dense_eig(delta);
        nlsf::eig::EigConfig ec;
        ec.num_pairs = pairs;
        ec.seed = common.seed.value_or(0);
        return nlsf::eig::lanczos_smallest(delta, ec);
      };
      if (!common.cache_dir.empty()) {
        const std::string tag = gso + (pairs <= 0 ? "_dense" : "_" + std::to_string(pairs));
        basis = nlsf::eig::BasisCache(common.cache_dir).get_or_compute(delta, tag, compute);
      } else {
        basis = compute();
      }
      std::ofstream file;
      std::ostream& out = sink(common.out, file);
      out << "index,eigenvalue,group\n" << std::setprecision(17);
      for (std::size_t gi = 0; gi < basis.groups.size(); ++gi)
        for (auto k = basis.groups[gi].begin; k < basis.groups[gi].end; ++k)
          out << k << ',' << basis.eigenvalues[k] << ',' << gi << '\n';
      return 0;
    }
    if (app.got_subcommand(analyze_cmd)) {
      const auto g = load_graph(edges, features);
      const auto basis = nlsf::eig::dense_eig(nlsf::build_laplacian(g, gso_from(gso)));
      const auto coeffs =
          mode == "index"
              ? nlsf::analyze_index(basis, g.features, J)
              : nlsf::analyze_value(basis,
                                    nlsf::make_bank({bank_kind == "dyadic" ? nlsf::BankKind::Dyadic : nlsf::BankKind::Uniform,
                                                     r, S, K},
                                                    basis.lambda_max),
                                    g.features);
      if (common.out.empty()) {
        std::cout << "band,channel,value\n" << std::setprecision(17);
        for (int j = 0; j < coeffs.rows(); ++j)
          for (int c = 0; c < coeffs.d; ++c) std::cout << j << ',' << c << ',' << coeffs.at(j, c) << '\n';
      } else {
        nlsf::write_coefficients_csv(common.out, coeffs);
      }
      return 0;
    }
    if (app.got_subcommand(node_cmd)) return nlsf::run(config_for(common, nlsf::RunTask::NodeClassify));
    if (app.got_subcommand(graph_cmd)) return nlsf::run(config_for(common, nlsf::RunTask::GraphClassify));
    if (app.got_subcommand(verify_cmd)) {
      auto cfg = config_for(common, nlsf::RunTask::Verify);
      if (!suites.empty()) {
        const auto all = nlsf::verify::suite_names();
        for (const auto& s : suites)
          if (std::find(all.begin(), all.end(), s) == all.end()) throw nlsf::ConfigError("--suite: unknown suite '" + s + "'");
        cfg.suites = suites;
      }
      return nlsf::run(cfg);
    }
    if (app.got_subcommand(demo_cmd)) {
      auto cfg = config_for(common, nlsf::RunTask::Demo);
      if (common.config.empty() || demo_cmd->count("--M")) cfg.demo.M = demo.M;
      if (common.config.empty() || demo_cmd->count("--cutoff")) cfg.demo.cutoff = demo.cutoff;
      if (common.config.empty() || demo_cmd->count("--t-low")) cfg.demo.t_low = {t_low[0], t_low[1]};
      if (common.config.empty() || demo_cmd->count("--t-high")) cfg.demo.t_high = {t_high[0], t_high[1]};
      return nlsf::run(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlsf::exit_code_for(e);
  }
  return 1;
}
