#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "nlsf/datasets.hpp"
#include "nlsf/error.hpp"
#include "nlsf/train.hpp"

using namespace nlsf;

namespace {

int count(const std::vector<SplitTag>& tags, SplitTag t) { return static_cast<int>(std::count(tags.begin(), tags.end(), t)); }

NlsfConfig small_model(int in_dim, int classes) {
  NlsfConfig cfg;
  cfg.branches = {BranchSpec{SpectralMode::Index, 2, {}, GsoKind::Combinatorial, 0.0}};
  cfg.variant = Variant::LeadingDiag;
  cfg.in_dim = in_dim;
  cfg.num_classes = classes;
  cfg.psi_hidden = {8};
  cfg.head_hidden = {8};
  return cfg;
}

}  // namespace

TEST_CASE("node splits") {
  std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  SplitSpec one;
  one.per_class = 1;
  one.val = 2;
  one.test = 100;
  const auto tags = split_nodes(labels, one, 3);
  CHECK(count(tags, SplitTag::Train) == 2);
  CHECK(count(tags, SplitTag::Val) == 2);
  CHECK(count(tags, SplitTag::Test) == 6);
  std::vector<int> seen;
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == SplitTag::Train) seen.push_back(labels[i]);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{0, 1});
  CHECK(split_nodes(labels, one, 3) == tags);

  SplitSpec frac;
  frac.kind = SplitSpec::Kind::Fraction;
  std::vector<int> many(200, 0);
  const auto f = split_nodes(many, frac, 1);
  CHECK(count(f, SplitTag::Train) == 5);
  CHECK(count(f, SplitTag::Val) == 5);
  CHECK(count(f, SplitTag::Test) == 190);

  SplitSpec greedy;
  greedy.per_class = 6;
  CHECK_THROWS_AS(split_nodes(labels, greedy, 0), InvalidArgument);
}

TEST_CASE("graph splits") {
  const auto s = split_graphs(10, 4);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 1);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
  CHECK(split_graphs(10, 4).train == s.train);
}

TEST_CASE("accuracy") {
  Matrix logits(4, 2);
  logits << 1, 0, 0, 1, 1, 0, 0, 1;
  CHECK(accuracy(logits, {0, 1, 0, 1}, {0, 1, 2, 3}) == 1.0);
  CHECK_THROWS_AS(accuracy(logits, {0, 1, 0, 1}, {}), InvalidArgument);
  CHECK(accuracy(logits, {1, 1, 0, 1}, {0}) == 0.0);
  CHECK(accuracy(logits, {1, 1, 0, 1}, {1}) == 1.0);

  std::mt19937_64 rng(9);
  const Matrix random = fixtures::gaussian(20000, 4, rng);
  std::vector<int> t(20000);
  for (auto& v : t) v = static_cast<int>(rng() % 4);
  std::vector<Eigen::Index> rows(20000);
  for (Eigen::Index i = 0; i < 20000; ++i) rows[i] = i;
  CHECK(accuracy(random, t, rows) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  SbmSpec spec;
  spec.block_size = 10;
  spec.seed = 2;
  GraphSignal g = make_sbm(spec);
  SplitSpec split;
  split.per_class = 2;
  split.val = 4;
  g.mask = split_nodes(*g.node_labels, split, 1);
  const NlsfConfig cfg = small_model(spec.feature_dim, 2);
  NlsfModel model(cfg, 3);
  const auto ctx = prepare_context(cfg, g);
  const Matrix before = model.forward(ctx, g.features);

  TrainConfig tc;
  tc.adam.lr = 0.0;
  tc.adam.weight_decay = 0.0;
  tc.epochs = 5;
  tc.patience = 5;
  std::ostringstream log;
  const auto r = train_node(model, ctx, g, tc, &log);
  CHECK(r.history.size() == 5);
  for (const auto& e : r.history) CHECK(e.train_loss == r.history.front().train_loss);
  CHECK(model.forward(ctx, g.features) == before);
  const std::string text = log.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("node training keeps the best epoch and is deterministic") {
  SbmSpec spec;
  spec.block_size = 15;
  spec.seed = 4;
  GraphSignal g = make_sbm(spec);
  SplitSpec split;
  split.per_class = 2;
  split.val = 6;
  g.mask = split_nodes(*g.node_labels, split, 2);
  const NlsfConfig cfg = small_model(spec.feature_dim, 2);
  const auto ctx = prepare_context(cfg, g);
  TrainConfig tc;
  tc.epochs = 40;
  tc.patience = 10;

  NlsfModel a(cfg, 5), b(cfg, 5);
  const auto ra = train_node(a, ctx, g, tc);
  const auto rb = train_node(b, ctx, g, tc);
  CHECK(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) CHECK(ra.history[i].val_loss == rb.history[i].val_loss);

  const auto best = std::min_element(ra.history.begin(), ra.history.end(),
                                     [](const auto& x, const auto& y) { return x.val_loss < y.val_loss; });
  CHECK(ra.best_epoch == best->epoch);
  CHECK(ra.best_val_loss == best->val_loss);
  CHECK(evaluate(a, ctx, g, SplitTag::Val).loss == doctest::Approx(ra.best_val_loss));
  CHECK(ra.history.back().train_loss < ra.history.front().train_loss);

  GraphSignal unmasked = g;
  unmasked.mask = std::vector<SplitTag>(g.num_nodes(), SplitTag::Train);
  CHECK_THROWS_AS(evaluate(a, ctx, unmasked, SplitTag::Test), InvalidArgument);
}

TEST_CASE("graph training") {
  auto data = make_cycle_vs_path(20, 6, 10, 3);
  NlsfConfig cfg = small_model(1, 2);
  cfg.variant = Variant::Diag;
  cfg.branches[0].J = 1;
  cfg.task = Task::GraphLevel;
  std::vector<GraphContext> ctx;
  for (const auto& g : data) ctx.push_back(prepare_context(cfg, g));
  const auto split = split_graphs(data.size(), 1);

  TrainConfig tc;
  tc.epochs = 30;
  tc.patience = 30;
  tc.workers = 1;
  NlsfModel one(cfg, 2), four(cfg, 2);
  const auto r1 = train_graph(one, ctx, data, split, tc);
  tc.workers = 4;
  const auto r4 = train_graph(four, ctx, data, split, tc);
  for (std::size_t i = 0; i < r1.history.size(); ++i) CHECK(r1.history[i].train_loss == r4.history[i].train_loss);
  CHECK(r1.history.back().train_loss < r1.history.front().train_loss);

  for (auto& g : data) g.graph_label = 0;
  cfg.num_classes = 1;
  NlsfModel single(cfg, 3);
  tc.epochs = 5;
  tc.patience = 5;
  train_graph(single, ctx, data, split, tc);
  CHECK(evaluate(single, ctx, data, split.test).accuracy == 1.0);
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.patience = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.adam.lr = -1.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}
