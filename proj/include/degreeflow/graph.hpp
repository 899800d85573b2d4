#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "degreeflow/distribution.hpp"
#include "degreeflow/error.hpp"
#include "degreeflow/random.hpp"

namespace degreeflow {

using NodeId = std::uint64_t;

/**
 * Simple undirected graph supporting the duplication/deletion kernels.
 *
 * Node ids are handed out sequentially and never reused. Live nodes are kept
 * in a dense array so a uniform draw is O(1), and the degree histogram f is
 * updated on every edge change (f[i] = number of nodes with degree i).
 */
class DynamicGraph {
 public:
  DynamicGraph() = default;

  /// Cycle on n nodes; n = 2 gives a single edge and n = 1 a lone node.
  static DynamicGraph cycle(std::size_t n) {
    DynamicGraph g;
    for (std::size_t i = 0; i < n; ++i) g.add_node();
    if (n == 2) g.add_edge(0, 1);
    if (n >= 3) {
      for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
    }
    return g;
  }

  static DynamicGraph single_edge() { return cycle(2); }

  /// Graph on nodes 0..node_count-1 with the given edges.
  static DynamicGraph from_edges(std::size_t node_count,
                                 std::span<const std::pair<NodeId, NodeId>> edges) {
    DynamicGraph g;
    for (std::size_t i = 0; i < node_count; ++i) g.add_node();
    for (const auto& [u, v] : edges) g.add_edge(u, v);
    return g;
  }

  NodeId add_node() {
    const NodeId id = records_.size();
    records_.push_back(Record{{}, live_.size(), true});
    live_.push_back(id);
    bump(std::nullopt, 0);
    return id;
  }

  void add_edge(NodeId u, NodeId v) {
    require_live(u);
    require_live(v);
    if (u == v) throw Error("self-loop rejected");
    if (has_edge(u, v)) throw Error("duplicate edge rejected");
    link(u, v);
  }

  /// Removes `w` and its incident edges.
  void remove_node(NodeId w) {
    require_live(w);
    auto& rec = records_[w];
    for (NodeId x : rec.adj) {
      auto& xa = records_[x].adj;
      const auto old = xa.size();
      xa.erase(std::find(xa.begin(), xa.end(), w));
      bump(old, old - 1);
    }
    edges_ -= rec.adj.size();
    bump(rec.adj.size(), std::nullopt);
    rec.adj.clear();
    rec.adj.shrink_to_fit();
    rec.alive = false;

    const std::size_t slot = rec.slot;
    const NodeId moved = live_.back();
    live_[slot] = moved;
    records_[moved].slot = slot;
    live_.pop_back();
  }

  bool contains(NodeId v) const { return v < records_.size() && records_[v].alive; }

  bool has_edge(NodeId u, NodeId v) const {
    if (!contains(u) || !contains(v)) return false;
    const auto& a = records_[u].adj.size() <= records_[v].adj.size() ? records_[u].adj
                                                                      : records_[v].adj;
    const NodeId other = (&a == &records_[u].adj) ? v : u;
    return std::find(a.begin(), a.end(), other) != a.end();
  }

  std::size_t node_count() const { return live_.size(); }
  std::size_t edge_count() const { return edges_; }
  std::size_t degree(NodeId v) const { return records_.at(v).adj.size(); }
  std::span<const NodeId> neighbors(NodeId v) const { return records_.at(v).adj; }

  /// Live nodes in sampling order.
  std::span<const NodeId> nodes() const { return live_; }
  NodeId node_at(std::size_t slot) const { return live_.at(slot); }
  NodeId sample_node(Rng& rng) const { return live_[uniform_index(rng, live_.size())]; }

  /// Degree histogram; index i counts nodes of degree i. Length is max degree + 1.
  const std::vector<std::size_t>& degree_histogram() const { return hist_; }
  std::size_t max_degree() const { return hist_.empty() ? 0 : hist_.size() - 1; }

  /// Nodes created during the current time step; they cannot be deleted in it.
  void begin_step() { created_this_step_.clear(); }
  void mark_created(NodeId v) { created_this_step_.push_back(v); }
  bool is_protected_this_step(NodeId v) const {
    return std::find(created_this_step_.begin(), created_this_step_.end(), v) !=
           created_this_step_.end();
  }
  std::optional<NodeId> last_added() const {
    if (created_this_step_.empty()) return std::nullopt;
    return created_this_step_.back();
  }

  /// Histogram rebuilt from scratch (for invariant checks).
  std::vector<std::size_t> recount_histogram() const {
    std::vector<std::size_t> h(hist_.size(), 0);
    for (NodeId v : live_) {
      const auto d = records_[v].adj.size();
      if (d >= h.size()) h.resize(d + 1, 0);
      ++h[d];
    }
    return h;
  }

  /// Describes each broken structural invariant; empty when consistent.
  std::vector<std::string> check_invariants() const {
    std::vector<std::string> out;
    std::size_t twice_edges = 0;
    for (NodeId v : live_) {
      const auto& adj = records_[v].adj;
      twice_edges += adj.size();
      auto sorted = adj;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        out.push_back("multi-edge at node " + std::to_string(v));
      for (NodeId x : adj) {
        if (x == v) out.push_back("self-loop at node " + std::to_string(v));
        if (!contains(x)) out.push_back("edge to dead node from " + std::to_string(v));
        else {
          const auto& xa = records_[x].adj;
          if (std::find(xa.begin(), xa.end(), v) == xa.end())
            out.push_back("asymmetric adjacency " + std::to_string(v) + "-" + std::to_string(x));
        }
      }
    }
    if (twice_edges != 2 * edges_) out.push_back("edge count mismatch");
    std::size_t total = 0;
    for (auto c : hist_) total += c;
    if (total != live_.size()) out.push_back("histogram total != node count");
    auto recount = recount_histogram();
    auto h = hist_;
    const auto len = std::max(recount.size(), h.size());
    recount.resize(len, 0);
    h.resize(len, 0);
    if (recount != h) out.push_back("histogram differs from recount");
    return out;
  }

 private:
  struct Record {
    std::vector<NodeId> adj;
    std::size_t slot = 0;
    bool alive = false;
  };

  void require_live(NodeId v) const {
    if (!contains(v)) throw Error("unknown node id " + std::to_string(v));
  }

  void link(NodeId u, NodeId v) {
    auto& ua = records_[u].adj;
    auto& va = records_[v].adj;
    bump(ua.size(), ua.size() + 1);
    bump(va.size(), va.size() + 1);
    ua.push_back(v);
    va.push_back(u);
    ++edges_;
  }

  // Moves one node from degree `from` to degree `to` in the histogram.
  void bump(std::optional<std::size_t> from, std::optional<std::size_t> to) {
    if (from) --hist_[*from];
    if (to) {
      if (*to >= hist_.size()) hist_.resize(*to + 1, 0);
      ++hist_[*to];
    }
    while (hist_.size() > 1 && hist_.back() == 0) hist_.pop_back();
  }

  friend NodeId duplicate_from(DynamicGraph&, NodeId, double, Rng&);

  std::vector<Record> records_;
  std::vector<NodeId> live_;
  std::vector<std::size_t> hist_;
  std::size_t edges_ = 0;
  std::vector<NodeId> created_this_step_;
};

/// Duplicates `parent`: a new node joined to it and to each of its neighbors with probability p.
inline NodeId duplicate_from(DynamicGraph& graph, NodeId parent, double p, Rng& rng) {
  graph.require_live(parent);
  // Neighbors are copied before the new edge to the parent exists.
  const std::vector<NodeId> former(graph.records_[parent].adj);
  const NodeId child = graph.add_node();
  graph.link(parent, child);
  for (NodeId x : former) {
    if (bernoulli(rng, p)) graph.link(x, child);
  }
  graph.mark_created(child);
  return child;
}

/// Duplication step with a uniformly chosen parent. Returns the new node.
inline NodeId duplicate_step(DynamicGraph& graph, double p, Rng& rng) {
  if (graph.node_count() == 0) throw Error("cannot duplicate on empty graph");
  if (p < 0.0 || p > 1.0) throw Error("connection probability outside [0,1]");
  return duplicate_from(graph, graph.sample_node(rng), p, rng);
}

/// Which nodes the deletion step may remove.
enum class DeletionRule {
  /// Not the node created this step, and not a neighbor of a degree-1 node.
  /// Isolated nodes never arise. Pairs of degree-1 nodes are never deletable,
  /// so fixed-size graphs drift toward a perfect matching.
  Protected,
  /// Any node except one created this step. Isolated nodes may appear and are
  /// excluded from the degree distribution.
  Uniform,
};

inline bool is_deletable(const DynamicGraph& graph, NodeId w,
                         DeletionRule rule = DeletionRule::Protected) {
  if (graph.is_protected_this_step(w)) return false;
  if (rule == DeletionRule::Uniform) return true;
  for (NodeId x : graph.neighbors(w)) {
    if (graph.degree(x) == 1) return false;
  }
  return true;
}

/**
 * Deletes a uniformly drawn eligible node, resampling ineligible draws up to
 * N times. Returns the deleted id, or nullopt when every attempt was rejected.
 */
inline std::optional<NodeId> delete_step(DynamicGraph& graph, Rng& rng,
                                         DeletionRule rule = DeletionRule::Protected) {
  const std::size_t n = graph.node_count();
  if (n < 2) throw Error("deletion requires at least two nodes");
  for (std::size_t attempt = 0; attempt < n; ++attempt) {
    const NodeId w = graph.sample_node(rng);
    if (is_deletable(graph, w, rule)) {
      graph.remove_node(w);
      return w;
    }
  }
  return std::nullopt;
}

/// Per-step telemetry from evolve_step.
struct StepOutcome {
  bool duplicated = false;
  bool deleted = false;
  bool deletion_skipped = false;
  std::optional<NodeId> parent_node;
  std::optional<NodeId> new_node;
  std::optional<NodeId> deleted_node;
};

/// Per-state event probabilities of the duplication-deletion dynamics.
struct EventProbabilities {
  double r = 0.0;  ///< probability of the duplication step
  double p = 0.0;  ///< edge-copy probability
  double q = 0.0;  ///< probability of the deletion step
};

/**
 * One time step: duplicate with probability r, then with probability q delete
 * an eligible node and duplicate once more to replace it.
 */
inline StepOutcome evolve_step(DynamicGraph& graph, const EventProbabilities& ev, DeletionRule rule,
                               Rng& rng) {
  StepOutcome out;
  graph.begin_step();
  if (bernoulli(rng, ev.r)) {
    if (graph.node_count() == 0) throw Error("cannot duplicate on empty graph");
    const NodeId parent = graph.sample_node(rng);
    out.duplicated = true;
    out.parent_node = parent;
    out.new_node = duplicate_from(graph, parent, ev.p, rng);
  }
  if (bernoulli(rng, ev.q)) {
    if (graph.node_count() < 2) {
      out.deletion_skipped = true;
      return out;
    }
    auto deleted = delete_step(graph, rng, rule);
    if (!deleted) {
      out.deletion_skipped = true;
      return out;
    }
    out.deleted = true;
    out.deleted_node = deleted;
    const NodeId parent = graph.sample_node(rng);
    out.duplicated = true;
    out.parent_node = parent;
    out.new_node = duplicate_from(graph, parent, ev.p, rng);
  }
  return out;
}

/// g[i] = f[i] / (N - f[0]) over degrees 1..max(max_degree, 1).
inline DegreeDistribution empirical_distribution(const DynamicGraph& graph) {
  return distribution_from_histogram(graph.degree_histogram(),
                                     std::max<std::size_t>(graph.max_degree(), 1));
}

/// Same as above with a fixed dimension; degrees above it fold into the last bin.
inline DegreeDistribution empirical_distribution(const DynamicGraph& graph, std::size_t max_degree) {
  return distribution_from_histogram(graph.degree_histogram(), max_degree);
}

/// Fraction of nodes with degree zero.
inline double isolated_fraction(const DynamicGraph& graph) {
  const auto& h = graph.degree_histogram();
  if (graph.node_count() == 0 || h.empty()) return 0.0;
  return static_cast<double>(h[0]) / static_cast<double>(graph.node_count());
}

/// Size of the largest connected component divided by N (breadth-first search).
inline double largest_component_fraction(const DynamicGraph& graph) {
  const std::size_t n = graph.node_count();
  if (n == 0) throw Error("largest component of empty graph");
  NodeId max_id = 0;
  for (NodeId v : graph.nodes()) max_id = std::max(max_id, v);
  std::vector<char> seen(max_id + 1, 0);
  std::vector<NodeId> queue;
  std::size_t best = 0;
  for (NodeId start : graph.nodes()) {
    if (seen[start]) continue;
    seen[start] = 1;
    queue.assign(1, start);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (NodeId x : graph.neighbors(queue[head])) {
        if (!seen[x]) {
          seen[x] = 1;
          queue.push_back(x);
        }
      }
    }
    best = std::max(best, queue.size());
  }
  return static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace degreeflow
