#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "degreeflow/chain.hpp"
#include "degreeflow/graph.hpp"

namespace degreeflow {

enum class GrowthMode { FixedSize, Growing };

/// Initial graph: a cycle on `size` nodes (fixed-size mode), a single edge
/// (growing mode), or an edge-list file when `edge_list` is set.
struct InitialGraphSpec {
  std::size_t size = 200;
  std::optional<std::filesystem::path> edge_list;
};

/// The 7-tuple (M, A, pi0, r, p, q, G0) of the modulated duplication-deletion graph.
struct GraphParams {
  GrowthMode mode = GrowthMode::FixedSize;
  ThetaChain chain;
  double r = 0.0;
  std::vector<double> p{0.4};
  std::vector<double> q{0.1};
  InitialGraphSpec initial;
  DeletionRule deletion = DeletionRule::Uniform;

  std::size_t states() const { return chain.states(); }

  EventProbabilities events(std::size_t theta) const {
    if (theta >= p.size() || theta >= q.size()) throw Error("theta state has no (p, q) entry");
    return {r, p[theta], q[theta]};
  }
};

inline StepOutcome evolve_step(DynamicGraph& graph, const GraphParams& params, std::size_t theta,
                               Rng& rng) {
  return evolve_step(graph, params.events(theta), params.deletion, rng);
}

}  // namespace degreeflow
