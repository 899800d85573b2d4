#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "degreeflow/error.hpp"
#include "degreeflow/graph.hpp"
#include "degreeflow/model.hpp"

namespace degreeflow {

/**
 * Reads a text edge list: one "u v" pair of 0-based ids per line. Blank lines,
 * '#' comments and a leading JSON header line are skipped. Every id in
 * 0..max must appear in some edge.
 */
inline DynamicGraph read_edge_list(std::istream& in) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  std::size_t line_no = 0;
  NodeId max_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '{') continue;
    std::istringstream fields(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(fields >> u >> v) || (fields >> extra) || u < 0 || v < 0) {
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected \"u v\"");
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    max_id = std::max({max_id, static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  if (edges.empty()) throw ConfigError("edge list has no edges");
  DynamicGraph g;
  try {
    g = DynamicGraph::from_edges(max_id + 1, edges);
  } catch (const Error& e) {
    throw ConfigError(std::string("edge list: ") + e.what());
  }
  if (!g.degree_histogram().empty() && g.degree_histogram()[0] != 0) {
    throw ConfigError("edge list leaves isolated nodes");
  }
  return g;
}

inline DynamicGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list " + path.string());
  return read_edge_list(in);
}

/// Snapshot: JSON header {"N":..,"step":..,"edges":..} then "u v" lines with ids relabeled 0..N-1.
inline void write_snapshot(const DynamicGraph& graph, std::size_t step, std::ostream& out) {
  std::vector<NodeId> order(graph.nodes().begin(), graph.nodes().end());
  std::sort(order.begin(), order.end());
  std::unordered_map<NodeId, std::size_t> label;
  for (std::size_t i = 0; i < order.size(); ++i) label[order[i]] = i;

  nlohmann::ordered_json header{{"N", graph.node_count()}, {"step", step}, {"edges", graph.edge_count()}};
  out << header.dump() << '\n';
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (NodeId u : order) {
    for (NodeId v : graph.neighbors(u)) {
      if (u < v) edges.emplace_back(label[u], label[v]);
    }
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b] : edges) out << a << ' ' << b << '\n';
}

/// Initial graph: edge-list file if given, else a cycle on N0 nodes (fixed size) or a single edge (growing).
inline DynamicGraph make_initial_graph(const GraphParams& params) {
  if (params.initial.edge_list) return read_edge_list(*params.initial.edge_list);
  if (params.mode == GrowthMode::Growing) return DynamicGraph::single_edge();
  if (params.initial.size < 3) throw ConfigError("fixed-size mode needs N0 >= 3");
  return DynamicGraph::cycle(params.initial.size);
}

}  // namespace degreeflow
