#pragma once

#include <vector>

#include "exphormer/graph.hpp"

namespace exphormer::testing {

inline MultiGraph cycle_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n), 1});
  }
  return MultiGraph::from_edge_list(n, edges);
}

inline MultiGraph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1), 1});
  }
  return MultiGraph::from_edge_list(n, edges);
}

inline MultiGraph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1});
  }
  return MultiGraph::from_edge_list(n, edges);
}

// Outer 5-cycle, inner pentagram, spokes.
inline MultiGraph petersen_graph() {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 5; ++i) {
    edges.push_back({i, static_cast<NodeId>((i + 1) % 5), 1});
    edges.push_back({static_cast<NodeId>(5 + i), static_cast<NodeId>(5 + (i + 2) % 5), 1});
    edges.push_back({i, static_cast<NodeId>(5 + i), 1});
  }
  return MultiGraph::from_edge_list(10, edges);
}

inline MultiGraph edgeless_graph(std::size_t n) { return MultiGraph::from_edge_list(n, {}); }

}  // namespace exphormer::testing
