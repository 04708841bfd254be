#include "boltzinv/graphs.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <numeric>

#include "boltzinv/errors.hpp"

namespace boltzinv {

namespace {

int find(std::vector<int>& parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

bool LabeledGraph::connected() const {
  if (n <= 1) return true;
  std::vector<int> parent(n + 1);
  std::iota(parent.begin(), parent.end(), 0);
  int components = n;
  for (auto [i, j] : edges) {
    const int a = find(parent, i), b = find(parent, j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

std::string LabeledGraph::adjacency() const {
  std::vector<std::vector<int>> adj(n + 1);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::string out;
  for (int v = 1; v <= n; ++v) {
    std::sort(adj[v].begin(), adj[v].end());
    out += fmt::format("{}: {}{}", v, fmt::join(adj[v], " "), v < n ? "; " : "");
  }
  return out;
}

std::vector<LabeledGraph> enumerate_connected_graphs(int n) {
  if (n < 2 || n > 5) throw InputError(fmt::format("connected-graph enumeration supports 2 <= n <= 5, got {}", n));
  std::vector<std::pair<int, int>> all;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) all.emplace_back(i, j);
  std::vector<LabeledGraph> out;
  const unsigned subsets = 1u << all.size();
  for (unsigned mask = 1; mask < subsets; ++mask) {
    LabeledGraph g{n, {}};
    for (std::size_t e = 0; e < all.size(); ++e)
      if (mask & (1u << e)) g.edges.push_back(all[e]);
    if (g.connected()) out.push_back(std::move(g));
  }
  return out;
}

LabeledGraph pruefer_decode(const std::vector<int>& seq, int n) {
  if (static_cast<int>(seq.size()) != n - 2) throw InputError("Pruefer sequence must have length n - 2");
  std::vector<int> degree(n + 1, 1);
  for (int s : seq) {
    if (s < 1 || s > n) throw InputError("Pruefer entry out of range");
    ++degree[s];
  }
  LabeledGraph g{n, {}};
  for (int s : seq) {
    int leaf = 1;
    while (degree[leaf] != 1) ++leaf;
    g.edges.emplace_back(std::min(leaf, s), std::max(leaf, s));
    --degree[leaf];
    --degree[s];
  }
  int a = 0, b = 0;
  for (int v = 1; v <= n; ++v) {
    if (degree[v] == 1) (a == 0 ? a : b) = v;
  }
  g.edges.emplace_back(a, b);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::vector<LabeledGraph> enumerate_trees(int n) {
  if (n < 2 || n > 6) throw InputError(fmt::format("tree enumeration supports 2 <= n <= 6, got {}", n));
  std::vector<LabeledGraph> out;
  std::vector<int> seq(n - 2, 1);
  while (true) {
    out.push_back(pruefer_decode(seq, n));
    int k = n - 3;
    while (k >= 0 && seq[k] == n) seq[k--] = 1;
    if (k < 0) break;
    ++seq[k];
  }
  return out;
}

}  // namespace boltzinv
