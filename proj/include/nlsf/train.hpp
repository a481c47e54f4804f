#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "nlsf/model.hpp"
#include "nlsf/nn.hpp"

namespace nlsf {

struct SplitSpec {
  enum class Kind { PerClass, Fraction };
  Kind kind = Kind::PerClass;
  int per_class = 20;
  int val = 500;
  int test = 1000;
  double train_frac = 0.025;
  double val_frac = 0.025;
};

/// Deterministic train/val/test masks. Per-class specs draw `per_class`
/// training nodes from every class, then `val` and up to `test` from the rest.
/// Fraction specs round train and val counts; test takes the remainder.
std::vector<SplitTag> split_nodes(const std::vector<int>& labels, const SplitSpec& spec, std::uint64_t seed);

struct GraphSplit {
  std::vector<std::size_t> train, val, test;
};

/// 80/10/10 split of `count` graphs (rounded; test takes the remainder).
GraphSplit split_graphs(std::size_t count, std::uint64_t seed);

struct TrainConfig {
  nn::AdamConfig adam{1e-2, 0.9, 0.999, 1e-8, 5e-4};
  int epochs = 300;
  int patience = 200;
  std::uint64_t seed = 0;
  int workers = 1;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  double test_acc = 0.0;
  double test_loss = 0.0;
  nn::AdamState adam;
};

struct Metrics {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Accuracy and mean cross-entropy over the nodes tagged `tag`.
Metrics evaluate(const NlsfModel& model, const GraphContext& ctx, const GraphSignal& g, SplitTag tag);
/// Accuracy and mean cross-entropy over the listed graphs.
Metrics evaluate(const NlsfModel& model, const std::vector<GraphContext>& ctx, const std::vector<GraphSignal>& data,
                 const std::vector<std::size_t>& items);

double accuracy(const Matrix& logits, const std::vector<int>& targets, const std::vector<Eigen::Index>& rows);

/// Full-batch training with early stopping on validation loss. The model ends
/// holding its best-validation parameters. When `metrics` is given, one JSON
/// line per epoch and a final summary line are written to it.
TrainResult train_node(NlsfModel& model, const GraphContext& ctx, const GraphSignal& g, const TrainConfig& cfg,
                       std::ostream* metrics = nullptr);

/// Graph classification: gradients accumulated over all training graphs per
/// epoch (computed on `cfg.workers` threads, reduced in graph order).
TrainResult train_graph(NlsfModel& model, const std::vector<GraphContext>& ctx, const std::vector<GraphSignal>& data,
                        const GraphSplit& split, const TrainConfig& cfg, std::ostream* metrics = nullptr);

void write_epoch(std::ostream& out, const EpochRecord& r);
void write_summary(std::ostream& out, const TrainResult& r);

}  // namespace nlsf
