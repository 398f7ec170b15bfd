#pragma once

#include <utility>
#include <vector>

#include "starsim/core/types.hpp"

namespace starsim {

/// Undirected agent graph defining who observes whom. Edges are stored
/// normalized (lo < hi), deduplicated, with no self-loops.
class Topology {
public:
    Topology(int n_agents, std::vector<std::pair<AgentId, AgentId>> edges);

    int n_agents() const { return n_agents_; }
    const std::vector<std::pair<AgentId, AgentId>>& edges() const { return edges_; }

    // Symmetric neighborhood, sorted ascending, excluding the agent itself.
    // Throws std::out_of_range for an out-of-range agent id.
    const std::vector<AgentId>& neighbors(AgentId agent) const;

private:
    int n_agents_ = 0;
    std::vector<std::pair<AgentId, AgentId>> edges_;
    std::vector<std::vector<AgentId>> adjacency_;
};

/// Balanced binary tree on n agents: node i > 0 connects to parent (i-1)/2.
/// Connected, acyclic, n-1 edges.
Topology build_tree_topology(int n_agents);

}  // namespace starsim
