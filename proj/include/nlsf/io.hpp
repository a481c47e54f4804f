#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlsf/graph.hpp"

namespace nlsf::io {

/// Edge list: one edge per line, "i<TAB>j[<TAB>w]", 0-based, w defaults to 1.
/// Blank lines and lines starting with '#' are skipped; spaces are accepted
/// as separators too.
std::vector<Edge> parse_edge_list(std::istream& in, const std::string& source = "<stream>");
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

/// Feature CSV: one row per node, no header.
Matrix parse_feature_csv(std::istream& in, const std::string& source = "<stream>");
Matrix read_feature_csv(const std::filesystem::path& path);

/// Label CSV: "node_index,label" per line.
std::vector<std::pair<std::int64_t, int>> parse_label_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<std::pair<std::int64_t, int>> read_label_csv(const std::filesystem::path& path);

struct NodeDatasetPaths {
  std::filesystem::path edges;
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> labels;
  std::optional<std::int64_t> num_nodes;
  bool degree_features = false;
};

/// Loads a single graph. Node count is `num_nodes` when given, otherwise one
/// past the largest index seen in the edge and label files.
GraphSignal load_node_dataset(const NodeDatasetPaths& paths);

/// Multi-graph container. The index file is CSV "graph_id,edge_file,feature_file,label"
/// with paths relative to the index file; feature_file may be empty.
std::vector<GraphSignal> load_graph_dataset(const std::filesystem::path& index_file, bool degree_features);

}  // namespace nlsf::io
