#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nlsf/graph.hpp"

namespace nlsf {

struct SbmSpec {
  int block_size = 30;
  double p_in = 0.5;
  double p_out = 0.02;
  int feature_dim = 4;
  std::uint64_t seed = 0;
};

/// Two-block stochastic block model; node labels are block ids and features
/// are i.i.d. standard normal.
GraphSignal make_sbm(const SbmSpec& spec);

/// Cycles (label 0) and paths (label 1) with n drawn uniformly from
/// [n_min, n_max], alternating classes, with a single degree feature.
std::vector<GraphSignal> make_cycle_vs_path(int count, int n_min, int n_max, std::uint64_t seed);

/// Erdos-Renyi graph with edge probability p plus a random spanning tree,
/// so the result is connected; d standard-normal feature channels.
GraphSignal random_connected_graph(std::int64_t n, double p, int d, std::mt19937_64& rng);

}  // namespace nlsf
