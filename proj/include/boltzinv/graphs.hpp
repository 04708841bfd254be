#pragma once

#include <string>
#include <utility>
#include <vector>

namespace boltzinv {

/// Simple graph on vertices 1..n; edges (i, j) with i < j.
struct LabeledGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  bool connected() const;
  bool is_tree() const { return connected() && static_cast<int>(edges.size()) == n - 1; }
  std::string adjacency() const;
  bool operator==(const LabeledGraph&) const = default;
};

/// All connected labelled graphs on n vertices, 2 <= n <= 5, by filtering the
/// edge subsets in increasing bitmask order.
std::vector<LabeledGraph> enumerate_connected_graphs(int n);

/// All labelled trees on n vertices, 2 <= n <= 6, decoded from Pruefer
/// sequences in lexicographic order.
std::vector<LabeledGraph> enumerate_trees(int n);

/// Tree encoded by a Pruefer sequence of length n - 2 over 1..n.
LabeledGraph pruefer_decode(const std::vector<int>& seq, int n);

}  // namespace boltzinv
