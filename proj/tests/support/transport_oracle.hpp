#pragma once

// Brute-force transport oracle for small instances: the optimum of a balanced
// transportation LP is attained at a basic feasible solution, and every basis
// is a spanning tree of the complete bipartite graph. Enumerate all spanning
// trees, solve each by leaf elimination and keep the cheapest feasible one.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace refimpl {

namespace detail {

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// Flows on a spanning tree are forced: peel leaves, each leaf's single edge
// must carry exactly the leaf's outstanding balance.
inline bool tree_cost(const std::vector<std::pair<int, int>>& edges,
                      std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost, double* out_cost) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  const int nodes = n + m;
  std::vector<double> balance(static_cast<std::size_t>(nodes));
  for (int i = 0; i < n; ++i) balance[static_cast<std::size_t>(i)] = supply[static_cast<std::size_t>(i)];
  for (int j = 0; j < m; ++j) balance[static_cast<std::size_t>(n + j)] = -demand[static_cast<std::size_t>(j)];

  std::vector<int> degree(static_cast<std::size_t>(nodes), 0);
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(nodes));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    degree[static_cast<std::size_t>(i)]++;
    degree[static_cast<std::size_t>(n + j)]++;
    incident[static_cast<std::size_t>(i)].push_back(static_cast<int>(e));
    incident[static_cast<std::size_t>(n + j)].push_back(static_cast<int>(e));
  }

  std::vector<bool> edge_done(edges.size(), false);
  std::vector<bool> node_done(static_cast<std::size_t>(nodes), false);
  double total = 0.0;
  for (std::size_t step = 0; step + 1 < static_cast<std::size_t>(nodes); ++step) {
    int leaf = -1;
    for (int v = 0; v < nodes; ++v) {
      if (!node_done[static_cast<std::size_t>(v)] && degree[static_cast<std::size_t>(v)] == 1) {
        leaf = v;
        break;
      }
    }
    if (leaf < 0) return false;  // not a tree
    int eid = -1;
    for (int e : incident[static_cast<std::size_t>(leaf)]) {
      if (!edge_done[static_cast<std::size_t>(e)]) {
        eid = e;
        break;
      }
    }
    const auto [i, j] = edges[static_cast<std::size_t>(eid)];
    const int other = leaf < n ? n + j : i;
    // Mass from source i to sink j along this edge.
    const double flow = leaf < n ? balance[static_cast<std::size_t>(leaf)]
                                 : -balance[static_cast<std::size_t>(leaf)];
    if (flow < -1e-12) return false;  // infeasible vertex
    total += std::max(flow, 0.0) *
             cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                  static_cast<std::size_t>(j)];
    balance[static_cast<std::size_t>(other)] += balance[static_cast<std::size_t>(leaf)];
    balance[static_cast<std::size_t>(leaf)] = 0.0;
    node_done[static_cast<std::size_t>(leaf)] = true;
    edge_done[static_cast<std::size_t>(eid)] = true;
    degree[static_cast<std::size_t>(leaf)]--;
    degree[static_cast<std::size_t>(other)]--;
  }
  *out_cost = total;
  return true;
}

inline void enumerate_trees(int n, int m, std::size_t next_edge,
                            std::vector<std::pair<int, int>>& chosen, Dsu dsu,
                            std::span<const double> supply,
                            std::span<const double> demand,
                            std::span<const double> cost, double* best) {
  const std::size_t need = static_cast<std::size_t>(n + m - 1);
  const std::size_t total_edges = static_cast<std::size_t>(n * m);
  if (chosen.size() == need) {
    double c;
    if (tree_cost(chosen, supply, demand, cost, &c)) *best = std::min(*best, c);
    return;
  }
  if (next_edge >= total_edges) return;
  if (total_edges - next_edge < need - chosen.size()) return;

  const int i = static_cast<int>(next_edge) / m;
  const int j = static_cast<int>(next_edge) % m;
  Dsu with = dsu;
  if (with.unite(i, n + j)) {
    chosen.emplace_back(i, j);
    enumerate_trees(n, m, next_edge + 1, chosen, with, supply, demand, cost, best);
    chosen.pop_back();
  }
  enumerate_trees(n, m, next_edge + 1, chosen, dsu, supply, demand, cost, best);
}

}  // namespace detail

/// Exact optimum of the balanced transport problem by exhaustive vertex
/// enumeration. Sides must be small (intended for <= 4 unique words each).
inline double brute_force_transport(std::span<const double> supply,
                                    std::span<const double> demand,
                                    std::span<const double> cost) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> chosen;
  detail::enumerate_trees(n, m, 0, chosen, detail::Dsu(static_cast<std::size_t>(n + m)),
                          supply, demand, cost, &best);
  return best;
}

}  // namespace refimpl
