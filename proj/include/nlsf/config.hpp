#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlsf/datasets.hpp"
#include "nlsf/model.hpp"
#include "nlsf/train.hpp"

namespace nlsf {

enum class RunTask { NodeClassify, GraphClassify, Verify, Demo };

const char* to_string(RunTask t);

struct DatasetConfig {
  enum class Kind { None, NodeFiles, GraphIndex, Sbm, CycleVsPath };
  Kind kind = Kind::None;
  std::filesystem::path edges, features, labels, index;
  bool degree_features = false;
  SbmSpec sbm;
  int count = 40;
  int n_min = 8;
  int n_max = 16;
  std::uint64_t seed = 0;
};

struct DemoConfig {
  int M = 16;
  std::pair<int, int> t_low{1, 0};
  std::pair<int, int> t_high{0, 3};
  double cutoff = 0.3;
};

struct RunConfig {
  RunTask task = RunTask::Verify;
  DatasetConfig dataset;
  NlsfConfig model;
  TrainConfig train;
  SplitSpec split;
  int repeats = 1;
  std::vector<std::string> suites;
  DemoConfig demo;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::uint64_t seed = 0;
};

/// Parses a JSON run configuration. Relative paths resolve against
/// `base_dir`. Every failure raises ConfigError naming the offending field.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

/// Executes the configured task and writes its artifacts under cfg.out.
/// Returns 0 on success and 1 when a verification suite fails; errors
/// propagate as exceptions.
int run(const RunConfig& cfg);

/// Process exit code for an exception escaping run(): 2 for configuration
/// errors, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace nlsf
