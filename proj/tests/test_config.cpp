#include <doctest.h>

#include <string>

#include "nlsf/config.hpp"
#include "nlsf/error.hpp"

using namespace nlsf;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("valid configuration") {
  const auto cfg = parse_run_config(R"({
    "task": "node",
    "seed": 4,
    "dataset": {"kind": "sbm", "block_size": 12},
    "model": {"branches": [{"mode": "value", "bank": {"kind": "uniform", "S": 2, "K": 2}, "gso": "N"}],
              "variant": "leading_full", "layers": 2, "psi_hidden": [4]},
    "train": {"lr": 0.005, "epochs": 20, "patience": 5},
    "split": {"kind": "fraction", "train_frac": 0.1, "val_frac": 0.1}
  })");
  CHECK(cfg.task == RunTask::NodeClassify);
  CHECK(cfg.seed == 4);
  CHECK(cfg.dataset.sbm.block_size == 12);
  CHECK(cfg.model.branches.at(0).mode == SpectralMode::Value);
  CHECK(cfg.model.branches.at(0).gso == GsoKind::Normalized);
  CHECK(cfg.model.variant == Variant::LeadingFull);
  CHECK(cfg.model.layers == 2);
  CHECK(cfg.train.adam.lr == 0.005);
  CHECK(cfg.split.kind == SplitSpec::Kind::Fraction);
}

TEST_CASE("configuration errors name the field") {
  CHECK(error_of("{").size() > 0);
  CHECK(error_of(R"({"task": "verify", "bogus": 1})").find("bogus") != std::string::npos);
  CHECK(error_of(R"({"task": "node", "dataset": {"kind": "sbm"}, "model": {"layers": "two"}})").find("model.layers") != std::string::npos);
  CHECK(error_of(R"({"task": "fly"})").find("task") != std::string::npos);
  CHECK(error_of(R"({"task": "node", "dataset": {"kind": "sbm"}, "train": {"epochs": 5, "patience": 9}})").find("patience") != std::string::npos);
  CHECK(error_of(R"({"task": "node", "dataset": {"kind": "sbm"}, "model": {"variant": "wide"}})").find("variant") != std::string::npos);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.json"), ConfigError);

  const Error* base = nullptr;
  ConfigError e("x");
  base = &e;
  CHECK(exit_code_for(*base) == 2);
  CHECK(exit_code_for(InvalidArgument("y")) == 1);
}
