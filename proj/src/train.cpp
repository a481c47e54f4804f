#include "nlsf/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

namespace nlsf {

namespace {

std::vector<Eigen::Index> rows_with(const GraphSignal& g, SplitTag tag) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < g.mask->size(); ++i)
    if ((*g.mask)[i] == tag) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::vector<Matrix> snapshot(const std::vector<nn::ParamRef>& params) {
  std::vector<Matrix> out;
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

void restore(const std::vector<nn::ParamRef>& params, const std::vector<Matrix>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) *params[k].value = values[k];
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss)) throw NonFiniteLoss("non-finite training loss at epoch " + std::to_string(epoch));
}

}  // namespace

std::vector<SplitTag> split_nodes(const std::vector<int>& labels, const SplitSpec& spec, std::uint64_t seed) {
  const std::size_t n = labels.size();
  std::mt19937_64 rng(seed);
  const auto order = shuffled(n, rng);
  std::vector<SplitTag> mask(n, SplitTag::None);
  std::vector<std::size_t> rest;

  if (spec.kind == SplitSpec::Kind::PerClass) {
    if (spec.per_class < 1 || spec.val < 0 || spec.test < 0) throw InvalidArgument("invalid per-class split counts");
    std::map<int, int> taken;
    std::map<int, int> available;
    for (int l : labels) ++available[l];
    for (const auto& [cls, count] : available) {
      if (count < spec.per_class) {
        throw InvalidArgument("class " + std::to_string(cls) + " has " + std::to_string(count) + " nodes, " +
                              std::to_string(spec.per_class) + " requested for training");
      }
    }
    for (std::size_t i : order) {
      if (taken[labels[i]] < spec.per_class) {
        ++taken[labels[i]];
        mask[i] = SplitTag::Train;
      } else {
        rest.push_back(i);
      }
    }
    if (static_cast<std::size_t>(spec.val) > rest.size()) {
      throw InvalidArgument("validation split needs " + std::to_string(spec.val) + " nodes, only " +
                            std::to_string(rest.size()) + " remain");
    }
    const std::size_t test = std::min(rest.size() - spec.val, static_cast<std::size_t>(spec.test));
    for (std::size_t k = 0; k < rest.size(); ++k) {
      if (k < static_cast<std::size_t>(spec.val)) mask[rest[k]] = SplitTag::Val;
      else if (k < spec.val + test) mask[rest[k]] = SplitTag::Test;
    }
    return mask;
  }

  if (!(spec.train_frac > 0.0) || !(spec.val_frac >= 0.0) || spec.train_frac + spec.val_frac > 1.0) {
    throw InvalidArgument("split fractions must be positive and sum to at most 1");
  }
  const auto n_train = static_cast<std::size_t>(std::lround(spec.train_frac * n));
  const auto n_val = static_cast<std::size_t>(std::lround(spec.val_frac * n));
  if (n_train == 0 || n_train + n_val > n) throw InvalidArgument("split fractions leave an empty or oversized split");
  for (std::size_t k = 0; k < n; ++k) {
    mask[order[k]] = k < n_train ? SplitTag::Train : (k < n_train + n_val ? SplitTag::Val : SplitTag::Test);
  }
  return mask;
}

GraphSplit split_graphs(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("cannot split an empty dataset");
  std::mt19937_64 rng(seed);
  const auto order = shuffled(count, rng);
  const auto n_train = static_cast<std::size_t>(std::lround(0.8 * count));
  const auto n_val = std::min(count - n_train, static_cast<std::size_t>(std::lround(0.1 * count)));
  GraphSplit s;
  for (std::size_t k = 0; k < count; ++k) {
    if (k < n_train) s.train.push_back(order[k]);
    else if (k < n_train + n_val) s.val.push_back(order[k]);
    else s.test.push_back(order[k]);
  }
  return s;
}

void TrainConfig::validate() const {
  if (!(adam.lr >= 0.0)) throw ConfigError("lr must be nonnegative");
  if (!(adam.weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 1 || patience > epochs) throw ConfigError("patience must lie in [1, epochs]");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

double accuracy(const Matrix& logits, const std::vector<int>& targets, const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) throw InvalidArgument("accuracy over an empty mask");
  int hit = 0;
  for (Eigen::Index i : rows) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == targets[i]) ++hit;
  }
  return static_cast<double>(hit) / rows.size();
}

Metrics evaluate(const NlsfModel& model, const GraphContext& ctx, const GraphSignal& g, SplitTag tag) {
  if (!g.mask || !g.node_labels) throw InvalidArgument("evaluate needs labels and a split mask");
  const auto rows = rows_with(g, tag);
  if (rows.empty()) throw InvalidArgument("evaluate: empty mask");
  const Matrix logits = model.forward(ctx, g.features);
  return {accuracy(logits, *g.node_labels, rows), nn::cross_entropy(logits, *g.node_labels, rows).loss};
}

Metrics evaluate(const NlsfModel& model, const std::vector<GraphContext>& ctx, const std::vector<GraphSignal>& data,
                 const std::vector<std::size_t>& items) {
  if (items.empty()) throw InvalidArgument("evaluate: empty mask");
  Metrics m;
  for (std::size_t i : items) {
    const Matrix logits = model.forward(ctx[i], data[i].features);
    const std::vector<int> target{*data[i].graph_label};
    m.accuracy += accuracy(logits, target, {0});
    m.loss += nn::cross_entropy(logits, target).loss;
  }
  m.accuracy /= items.size();
  m.loss /= items.size();
  return m;
}

void write_epoch(std::ostream& out, const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss;
  j["train_acc"] = r.train_acc;
  j["val_acc"] = r.val_acc;
  out << j.dump() << '\n';
}

void write_summary(std::ostream& out, const TrainResult& r) {
  nlohmann::ordered_json j;
  j["test_acc"] = r.test_acc;
  j["test_loss"] = r.test_loss;
  j["best_epoch"] = r.best_epoch;
  j["best_val_loss"] = r.best_val_loss;
  out << j.dump() << '\n';
}

TrainResult train_node(NlsfModel& model, const GraphContext& ctx, const GraphSignal& g, const TrainConfig& cfg,
                       std::ostream* metrics) {
  cfg.validate();
  if (!g.node_labels || !g.mask) throw InvalidArgument("node training needs labels and a split mask");
  const auto train_rows = rows_with(g, SplitTag::Train);
  const auto val_rows = rows_with(g, SplitTag::Val);
  const auto test_rows = rows_with(g, SplitTag::Test);
  if (train_rows.empty() || val_rows.empty()) throw InvalidArgument("node training needs train and val nodes");
  const auto& labels = *g.node_labels;

  auto params = model.params();
  nn::AdamState adam;
  adam.cfg = cfg.adam;
  TrainResult res;
  std::vector<Matrix> best = snapshot(params);
  res.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ForwardTape tape;
    const Matrix logits = model.forward(ctx, g.features, &tape);
    const auto lg = nn::cross_entropy(logits, labels, train_rows);
    check_finite(lg.loss, epoch);
    auto grads = nn::zeros_like(params);
    model.backward(tape, lg.grad, grads);
    nn::adam_step(adam, params, grads);

    const Matrix after = model.forward(ctx, g.features);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = nn::cross_entropy(after, labels, train_rows).loss;
    rec.val_loss = nn::cross_entropy(after, labels, val_rows).loss;
    rec.train_acc = accuracy(after, labels, train_rows);
    rec.val_acc = accuracy(after, labels, val_rows);
    check_finite(rec.train_loss, epoch);
    res.history.push_back(rec);
    if (metrics) write_epoch(*metrics, rec);

    if (rec.val_loss < res.best_val_loss) {
      res.best_val_loss = rec.val_loss;
      res.best_epoch = epoch;
      best = snapshot(params);
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  restore(params, best);
  res.adam = adam;
  if (!test_rows.empty()) {
    const auto m = evaluate(model, ctx, g, SplitTag::Test);
    res.test_acc = m.accuracy;
    res.test_loss = m.loss;
  }
  if (metrics) write_summary(*metrics, res);
  return res;
}

TrainResult train_graph(NlsfModel& model, const std::vector<GraphContext>& ctx, const std::vector<GraphSignal>& data,
                        const GraphSplit& split, const TrainConfig& cfg, std::ostream* metrics) {
  cfg.validate();
  if (ctx.size() != data.size()) throw DimensionError("one graph context per graph required");
  if (split.train.empty() || split.val.empty()) throw InvalidArgument("graph training needs train and val graphs");
  for (const auto& g : data)
    if (!g.graph_label) throw InvalidArgument("every graph needs a label");

  auto params = model.params();
  nn::AdamState adam;
  adam.cfg = cfg.adam;
  TrainResult res;
  std::vector<Matrix> best = snapshot(params);
  res.best_val_loss = std::numeric_limits<double>::infinity();

  const std::size_t m = split.train.size();
  const std::size_t workers = std::min<std::size_t>(cfg.workers, m);
  std::vector<std::vector<Matrix>> slot(m);
  std::vector<double> losses(m);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto work = [&](std::size_t w) {
      for (std::size_t k = w; k < m; k += workers) {
        const std::size_t i = split.train[k];
        ForwardTape tape;
        const Matrix logits = model.forward(ctx[i], data[i].features, &tape);
        const auto lg = nn::cross_entropy(logits, {*data[i].graph_label});
        slot[k] = nn::zeros_like(params);
        model.backward(tape, lg.grad / static_cast<double>(m), slot[k]);
        losses[k] = lg.loss;
      }
    };
    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    // Fixed-order reduction keeps results independent of the worker count.
    auto grads = nn::zeros_like(params);
    double loss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      loss += losses[k] / m;
      for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += slot[k][p];
    }
    check_finite(loss, epoch);
    nn::adam_step(adam, params, grads);

    const auto tr = evaluate(model, ctx, data, split.train);
    const auto va = evaluate(model, ctx, data, split.val);
    EpochRecord rec{epoch, tr.loss, va.loss, tr.accuracy, va.accuracy};
    check_finite(rec.train_loss, epoch);
    res.history.push_back(rec);
    if (metrics) write_epoch(*metrics, rec);

    if (rec.val_loss < res.best_val_loss) {
      res.best_val_loss = rec.val_loss;
      res.best_epoch = epoch;
      best = snapshot(params);
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  restore(params, best);
  res.adam = adam;
  if (!split.test.empty()) {
    const auto te = evaluate(model, ctx, data, split.test);
    res.test_acc = te.accuracy;
    res.test_loss = te.loss;
  }
  if (metrics) write_summary(*metrics, res);
  return res;
}

}  // namespace nlsf
