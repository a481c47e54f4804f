#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlsf/error.hpp"
#include "nlsf/io.hpp"

namespace nlsf::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& tok, const std::string& source, std::size_t line, const char* what) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + tok + "'");
  }
  return value;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

}  // namespace

std::vector<Edge> parse_edge_list(std::istream& in, const std::string& source) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tok = split(t, "\t ");
    if (tok.size() != 2 && tok.size() != 3) {
      throw ParseError(source, lineno, "expected 'i<TAB>j[<TAB>w]'");
    }
    Edge e;
    e.i = parse_number<std::int64_t>(tok[0], source, lineno, "node index");
    e.j = parse_number<std::int64_t>(tok[1], source, lineno, "node index");
    if (e.i < 0 || e.j < 0) throw ParseError(source, lineno, "negative node index");
    if (tok.size() == 3) {
      e.w = parse_number<double>(tok[2], source, lineno, "weight");
      if (!std::isfinite(e.w) || e.w < 0.0) throw ParseError(source, lineno, "weight must be finite and nonnegative");
    }
    edges.push_back(e);
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_edge_list(in, path.string());
}

Matrix parse_feature_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split_csv(t)) row.push_back(parse_number<double>(tok, source, lineno, "feature value"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(source, lineno, "row has " + std::to_string(row.size()) + " columns, expected " +
                                           std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
  return x;
}

Matrix read_feature_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_feature_csv(in, path.string());
}

std::vector<std::pair<std::int64_t, int>> parse_label_csv(std::istream& in, const std::string& source) {
  std::vector<std::pair<std::int64_t, int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto tok = split_csv(t);
    if (tok.size() != 2) throw ParseError(source, lineno, "expected 'node_index,label'");
    const auto node = parse_number<std::int64_t>(tok[0], source, lineno, "node index");
    const auto label = parse_number<int>(tok[1], source, lineno, "label");
    if (node < 0 || label < 0) throw ParseError(source, lineno, "node index and label must be nonnegative");
    out.emplace_back(node, label);
  }
  return out;
}

std::vector<std::pair<std::int64_t, int>> read_label_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_label_csv(in, path.string());
}

GraphSignal load_node_dataset(const NodeDatasetPaths& paths) {
  const auto edges = read_edge_list(paths.edges);
  std::vector<std::pair<std::int64_t, int>> labels;
  if (paths.labels) labels = read_label_csv(*paths.labels);

  std::int64_t n = 0;
  if (paths.num_nodes) {
    n = *paths.num_nodes;
  } else {
    for (const auto& e : edges) n = std::max({n, e.i + 1, e.j + 1});
    for (const auto& [node, _] : labels) n = std::max(n, node + 1);
  }
  for (const auto& e : edges) {
    if (e.i >= n || e.j >= n) {
      throw ParseError(paths.edges.string(), 0, "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                                    ") exceeds num_nodes = " + std::to_string(n));
    }
  }

  GraphSignal g;
  try {
    g.adjacency = SparseSymMatrix::from_entries(n, edges);
  } catch (const InvalidArgument& ex) {
    throw ParseError(paths.edges.string(), 0, ex.what());
  }
  if (paths.features) {
    g.features = read_feature_csv(*paths.features);
    if (g.features.rows() != n) {
      throw ParseError(paths.features->string(), 0,
                       "feature file has " + std::to_string(g.features.rows()) + " rows, graph has " +
                           std::to_string(n) + " nodes");
    }
  } else {
    g.features = Matrix(n, 0);
  }
  if (paths.labels) {
    std::vector<int> lab(n, -1);
    for (const auto& [node, label] : labels) {
      if (node >= n) throw ParseError(paths.labels->string(), 0, "label for node " + std::to_string(node) + " out of range");
      lab[node] = label;
    }
    for (std::int64_t i = 0; i < n; ++i) {
      if (lab[i] < 0) throw ParseError(paths.labels->string(), 0, "node " + std::to_string(i) + " has no label");
    }
    g.node_labels = std::move(lab);
  }
  if (paths.degree_features) g = add_degree_features(g);
  try {
    g.validate();
  } catch (const Error& ex) {
    throw ParseError(paths.edges.string(), 0, ex.what());
  }
  return g;
}

std::vector<GraphSignal> load_graph_dataset(const std::filesystem::path& index_file, bool degree_features) {
  auto in = open(index_file);
  const auto base = index_file.parent_path();
  std::vector<GraphSignal> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tok = split_csv(t);
    if (tok.size() != 4) throw ParseError(index_file.string(), lineno, "expected 'graph_id,edge_file,feature_file,label'");
    NodeDatasetPaths p;
    p.edges = base / tok[1];
    if (!tok[2].empty()) p.features = base / tok[2];
    p.degree_features = degree_features;
    const int label = parse_number<int>(tok[3], index_file.string(), lineno, "graph label");
    if (p.features) {
      // Node count comes from the feature file so trailing isolated nodes survive.
      p.num_nodes = read_feature_csv(*p.features).rows();
    }
    GraphSignal g = load_node_dataset(p);
    if (g.features.cols() == 0) g.features = Matrix::Ones(g.num_nodes(), 1);
    g.graph_label = label;
    out.push_back(std::move(g));
  }
  if (out.empty()) throw ParseError(index_file.string(), lineno, "index file lists no graphs");
  return out;
}

}  // namespace nlsf::io
