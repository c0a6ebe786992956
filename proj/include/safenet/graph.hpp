#pragma once

#include <utility>
#include <vector>

namespace safenet {

// Undirected communication graph over agents 0..N-1. Edges are stored
// normalized (a < b), sorted and de-duplicated; adjacency lists are sorted
// ascending. Neighborhood queries distinguish the open neighborhood N_i
// (neighbors only) from the closed neighborhood N̄_i = N_i ∪ {i}, which is
// the index set every structured quantity (lifted states, gains, slack
// blocks) is built over.
class CommGraph {
 public:
  CommGraph() = default;
  CommGraph(int num_nodes, std::vector<std::pair<int, int>> edges);

  // Path graph 0-1-2-...-n-1.
  static CommGraph line(int num_nodes);

  int num_nodes() const { return num_nodes_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Sorted open neighborhood of node i (excludes i).
  const std::vector<int>& neighbors(int i) const;
  // Sorted closed neighborhood of node i (includes i).
  const std::vector<int>& closed_neighborhood(int i) const;
  int degree(int i) const;
  bool adjacent(int a, int b) const;

  bool is_connected() const;
  // Longest shortest-path distance; 0 for single node, throws if disconnected.
  int diameter() const;

 private:
  void check_node(int i) const;

  int num_nodes_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> closed_;
};

}  // namespace safenet
