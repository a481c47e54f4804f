#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "nlsf/checkpoint.hpp"
#include "nlsf/config.hpp"
#include "nlsf/io.hpp"
#include "nlsf/verify.hpp"

namespace nlsf {

namespace {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t k) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::filesystem::path metrics_path(const RunConfig& cfg, int rep) {
  return cfg.out / (cfg.repeats == 1 ? std::string("metrics.jsonl") : "metrics_" + std::to_string(rep) + ".jsonl");
}

void write_repeat_summary(const RunConfig& cfg, const std::vector<double>& acc) {
  const double k = static_cast<double>(acc.size());
  const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / k;
  double var = 0.0;
  for (double a : acc) var += (a - mean) * (a - mean);
  const double sd = acc.size() > 1 ? std::sqrt(var / (k - 1.0)) : 0.0;
  nlohmann::ordered_json j;
  j["runs"] = acc.size();
  j["test_acc"] = acc;
  j["test_acc_mean"] = mean;
  j["test_acc_ci95"] = 1.96 * sd / std::sqrt(k);
  j["interval"] = "mean +/- 1.96 * sd / sqrt(runs)";
  auto out = open_out(cfg.out / "summary.json");
  out << j.dump(2) << '\n';
  std::cout << "test accuracy " << mean << " +/- " << 1.96 * sd / std::sqrt(k) << " over " << acc.size() << " run(s)\n";
}

ContextOptions context_options(const RunConfig& cfg) {
  ContextOptions opt;
  opt.cache_dir = cfg.cache_dir;
  opt.seed = cfg.seed;
  return opt;
}

int max_label(const std::vector<int>& labels) {
  int m = -1;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("labels must be nonnegative");
    m = std::max(m, l);
  }
  return m;
}

int run_node(const RunConfig& cfg) {
  GraphSignal g;
  if (cfg.dataset.kind == DatasetConfig::Kind::Sbm) {
    g = make_sbm(cfg.dataset.sbm);
  } else {
    io::NodeDatasetPaths paths;
    paths.edges = cfg.dataset.edges;
    paths.labels = cfg.dataset.labels;
    if (!cfg.dataset.features.empty()) paths.features = cfg.dataset.features;
    paths.degree_features = cfg.dataset.degree_features;
    g = io::load_node_dataset(paths);
  }
  if (!g.node_labels) throw InvalidArgument("node task needs node labels");
  NlsfConfig mc = cfg.model;
  mc.in_dim = static_cast<int>(g.features.cols());
  mc.num_classes = max_label(*g.node_labels) + 1;
  const GraphContext ctx = prepare_context(mc, g, context_options(cfg));

  std::vector<double> acc;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    g.mask = split_nodes(*g.node_labels, cfg.split, mix_seed(cfg.seed, 2 * rep));
    NlsfModel model(mc, mix_seed(cfg.seed, 2 * rep + 1));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto out = open_out(metrics_path(cfg, rep));
    const TrainResult res = train_node(model, ctx, g, tc, &out);
    acc.push_back(res.test_acc);
    if (rep == 0) nn::save_checkpoint(cfg.out / "checkpoint.bin", model.params(), res.adam, std::to_string(cfg.seed));
  }
  write_repeat_summary(cfg, acc);
  return 0;
}

int run_graph(const RunConfig& cfg) {
  std::vector<GraphSignal> data = cfg.dataset.kind == DatasetConfig::Kind::CycleVsPath
                                      ? make_cycle_vs_path(cfg.dataset.count, cfg.dataset.n_min, cfg.dataset.n_max,
                                                           cfg.dataset.seed)
                                      : io::load_graph_dataset(cfg.dataset.index, cfg.dataset.degree_features);
  if (data.empty()) throw InvalidArgument("graph dataset is empty");
  NlsfConfig mc = cfg.model;
  mc.in_dim = static_cast<int>(data[0].features.cols());
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].graph_label) throw InvalidArgument("graph " + std::to_string(i) + " has no label");
    if (data[i].features.cols() != mc.in_dim) {
      throw DimensionError("graph " + std::to_string(i) + " has " + std::to_string(data[i].features.cols()) +
                           " feature channels, expected " + std::to_string(mc.in_dim));
    }
    labels.push_back(*data[i].graph_label);
  }
  mc.num_classes = max_label(labels) + 1;
  std::vector<GraphContext> ctx;
  for (const auto& g : data) ctx.push_back(prepare_context(mc, g, context_options(cfg)));

  std::vector<double> acc;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const GraphSplit split = split_graphs(data.size(), mix_seed(cfg.seed, 2 * rep));
    NlsfModel model(mc, mix_seed(cfg.seed, 2 * rep + 1));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto out = open_out(metrics_path(cfg, rep));
    const TrainResult res = train_graph(model, ctx, data, split, tc, &out);
    acc.push_back(res.test_acc);
    if (rep == 0) nn::save_checkpoint(cfg.out / "checkpoint.bin", model.params(), res.adam, std::to_string(cfg.seed));
  }
  write_repeat_summary(cfg, acc);
  return 0;
}

int run_verify(const RunConfig& cfg) {
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  bool ok = true;
  std::cout << std::left << std::setw(18) << "suite" << std::setw(8) << "cases" << std::setw(8) << "passed"
            << "worst_residual\n";
  for (const auto& name : cfg.suites) {
    const auto r = verify::run_suite(name, cfg.seed);
    ok = ok && r.passed;
    std::cout << std::left << std::setw(18) << r.suite << std::setw(8) << r.cases << std::setw(8)
              << (r.passed ? "yes" : "NO") << r.worst_residual << "  " << r.detail << '\n';
    nlohmann::ordered_json j;
    j["suite"] = r.suite;
    j["cases"] = r.cases;
    j["passed"] = r.passed;
    j["worst_residual"] = r.worst_residual;
    j["detail"] = r.detail;
    report.push_back(j);
  }
  auto out = open_out(cfg.out / "verify.json");
  out << report.dump(2) << '\n';
  return ok ? 0 : 1;
}

int run_demo(const RunConfig& cfg) {
  const auto& d = cfg.demo;
  const auto rep = verify::grid_functional_translation(d.M, d.t_low, d.t_high, d.cutoff);
  nlohmann::ordered_json j;
  j["M"] = d.M;
  j["t_low"] = {d.t_low.first, d.t_low.second};
  j["t_high"] = {d.t_high.first, d.t_high.second};
  j["cutoff"] = d.cutoff;
  j["orthogonality"] = rep.orthogonality;
  j["commutation"] = rep.commutation;
  j["equal_speed_error"] = rep.equal_speed_error;
  j["min_translation_distance"] = rep.min_translation_distance;
  open_out(cfg.out / "translation.json") << j.dump(2) << '\n';
  auto img = open_out(cfg.out / "translated.csv");
  img << std::setprecision(17);
  for (Eigen::Index y = 0; y < rep.image.rows(); ++y) {
    for (Eigen::Index x = 0; x < rep.image.cols(); ++x) img << (x ? "," : "") << rep.image(y, x);
    img << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  switch (cfg.task) {
    case RunTask::NodeClassify: return run_node(cfg);
    case RunTask::GraphClassify: return run_graph(cfg);
    case RunTask::Verify: return run_verify(cfg);
    case RunTask::Demo: return run_demo(cfg);
  }
  return 1;
}

}  // namespace nlsf
