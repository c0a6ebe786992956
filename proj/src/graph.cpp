#include "safenet/graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace safenet {

CommGraph::CommGraph(int num_nodes, std::vector<std::pair<int, int>> edges) : num_nodes_(num_nodes) {
  if (num_nodes <= 0) throw std::invalid_argument("CommGraph: need at least one node");
  for (auto& [a, b] : edges) {
    if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes)
      throw std::invalid_argument("CommGraph: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("CommGraph: self loops are not allowed");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  adjacency_.assign(num_nodes_, {});
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  closed_.assign(num_nodes_, {});
  for (int i = 0; i < num_nodes_; ++i) {
    std::sort(adjacency_[i].begin(), adjacency_[i].end());
    closed_[i] = adjacency_[i];
    closed_[i].push_back(i);
    std::sort(closed_[i].begin(), closed_[i].end());
  }
}

CommGraph CommGraph::line(int num_nodes) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < num_nodes; ++i) edges.emplace_back(i, i + 1);
  return CommGraph(num_nodes, std::move(edges));
}

void CommGraph::check_node(int i) const {
  if (i < 0 || i >= num_nodes_) throw std::out_of_range("CommGraph: node index " + std::to_string(i));
}

const std::vector<int>& CommGraph::neighbors(int i) const {
  check_node(i);
  return adjacency_[i];
}

const std::vector<int>& CommGraph::closed_neighborhood(int i) const {
  check_node(i);
  return closed_[i];
}

int CommGraph::degree(int i) const {
  check_node(i);
  return static_cast<int>(adjacency_[i].size());
}

bool CommGraph::adjacent(int a, int b) const {
  check_node(a);
  check_node(b);
  return std::binary_search(adjacency_[a].begin(), adjacency_[a].end(), b);
}

bool CommGraph::is_connected() const {
  std::vector<int> dist(num_nodes_, -1);
  std::queue<int> queue;
  queue.push(0);
  dist[0] = 0;
  int seen = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int w : adjacency_[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        ++seen;
        queue.push(w);
      }
    }
  }
  return seen == num_nodes_;
}

int CommGraph::diameter() const {
  int best = 0;
  for (int s = 0; s < num_nodes_; ++s) {
    std::vector<int> dist(num_nodes_, -1);
    std::queue<int> queue;
    queue.push(s);
    dist[s] = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (int w : adjacency_[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
      }
    }
    for (int d : dist) {
      if (d < 0) throw std::runtime_error("CommGraph::diameter: graph is disconnected");
      best = std::max(best, d);
    }
  }
  return best;
}

}  // namespace safenet
