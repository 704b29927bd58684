#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "softsim/error.hpp"

namespace softsim {

/// Solution of a balanced transportation problem on the complete bipartite
/// graph of `n` sources and `m` sinks. `flow` is row-major n x m.
struct TransportResult {
  double cost = 0.0;
  std::vector<double> flow;
  double max_optimality_violation = 0.0;  // reduced-cost certificate residual
};

/// Exact minimum-cost transport via successive shortest paths with node
/// potentials (Dijkstra on the residual graph). Costs must be nonnegative;
/// supplies and demands must balance. After termination the reduced costs
/// certify optimality: every arc has reduced cost >= 0 and every arc carrying
/// flow has reduced cost 0, up to the reported violation.
inline TransportResult solve_transport(std::span<const double> supply,
                                       std::span<const double> demand,
                                       std::span<const double> cost,
                                       double balance_tol = 1e-9) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (n == 0 || m == 0) throw ValueError("transport problem needs both sides nonempty");
  if (cost.size() != n * m) throw ValueError("cost matrix has wrong shape");

  double total_supply = 0.0, total_demand = 0.0;
  for (double a : supply) {
    if (a < 0.0) throw ValueError("negative supply");
    total_supply += a;
  }
  for (double b : demand) {
    if (b < 0.0) throw ValueError("negative demand");
    total_demand += b;
  }
  for (double c : cost) {
    if (!(c >= 0.0)) throw ValueError("costs must be nonnegative");
  }
  if (std::abs(total_supply - total_demand) > balance_tol) {
    throw ValueError("transport problem is unbalanced");
  }

  std::vector<double> a(supply.begin(), supply.end());
  std::vector<double> b(demand.begin(), demand.end());
  TransportResult res;
  res.flow.assign(n * m, 0.0);

  const std::size_t nodes = n + m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pi(nodes, 0.0);     // potentials
  std::vector<double> dist(nodes, 0.0);
  std::vector<int> parent(nodes, -1);     // parent node on the shortest path
  std::vector<char> done(nodes, 0);

  auto reduced = [&](std::size_t i, std::size_t j) {
    // Forward arc source i -> sink j; never negative beyond rounding.
    return std::max(0.0, cost[i * m + j] + pi[i] - pi[n + j]);
  };
  auto reduced_back = [&](std::size_t i, std::size_t j) {
    return std::max(0.0, -cost[i * m + j] + pi[n + j] - pi[i]);
  };

  // Each augmentation zeroes a source, a sink, or a flow entry, so the loop
  // terminates; the cap is a hard safety net.
  const std::size_t max_rounds = 4 * nodes * nodes + 64;
  for (std::size_t round = 0;; ++round) {
    std::size_t start_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] > 0.0) start_count++;
    }
    if (start_count == 0) break;
    if (round >= max_rounds) {
      throw NumericalError("transport solver failed to converge");
    }

    // Multi-source Dijkstra from all sources with remaining supply.
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] > 0.0) dist[i] = 0.0;
    }
    long target = -1;
    for (;;) {
      long u = -1;
      double best = inf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = static_cast<long>(v);
        }
      }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      if (static_cast<std::size_t>(u) >= n && b[static_cast<std::size_t>(u) - n] > 0.0) {
        target = u;
        break;
      }
      if (static_cast<std::size_t>(u) < n) {
        const auto i = static_cast<std::size_t>(u);
        for (std::size_t j = 0; j < m; ++j) {
          const double nd = dist[u] + reduced(i, j);
          if (nd < dist[n + j]) {
            dist[n + j] = nd;
            parent[n + j] = u;
          }
        }
      } else {
        const auto j = static_cast<std::size_t>(u) - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (res.flow[i * m + j] <= 0.0) continue;
          const double nd = dist[u] + reduced_back(i, j);
          if (nd < dist[i]) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }
    if (target < 0) {
      throw NumericalError("transport solver found no augmenting path");
    }

    // Update potentials.
    const double dt = dist[static_cast<std::size_t>(target)];
    for (std::size_t v = 0; v < nodes; ++v) {
      pi[v] += std::min(dist[v], dt);
    }

    // Bottleneck along the path back to some source.
    const auto t_sink = static_cast<std::size_t>(target) - n;
    double delta = b[t_sink];
    for (long v = target; parent[v] >= 0; v = parent[v]) {
      const long p = parent[v];
      if (static_cast<std::size_t>(v) >= n) {
        // forward arc p(source) -> v(sink): unbounded capacity
      } else {
        // backward arc p(sink) -> v(source) undoing flow[v][p - n]
        delta = std::min(delta,
                         res.flow[static_cast<std::size_t>(v) * m +
                                  (static_cast<std::size_t>(p) - n)]);
      }
    }
    {
      long v = target;
      while (parent[v] >= 0) v = parent[v];
      delta = std::min(delta, a[static_cast<std::size_t>(v)]);
    }

    // Apply the augmentation.
    for (long v = target; parent[v] >= 0; v = parent[v]) {
      const long p = parent[v];
      if (static_cast<std::size_t>(v) >= n) {
        res.flow[static_cast<std::size_t>(p) * m + (static_cast<std::size_t>(v) - n)] += delta;
      } else {
        auto& f = res.flow[static_cast<std::size_t>(v) * m + (static_cast<std::size_t>(p) - n)];
        f -= delta;
        if (f < 0.0) f = 0.0;  // exact zero was intended; guard rounding
      }
    }
    {
      long v = target;
      while (parent[v] >= 0) v = parent[v];
      a[static_cast<std::size_t>(v)] -= delta;
      if (a[static_cast<std::size_t>(v)] < 0.0) a[static_cast<std::size_t>(v)] = 0.0;
    }
    b[t_sink] -= delta;
    if (b[t_sink] < 0.0) b[t_sink] = 0.0;
  }

  // Objective and optimality certificate.
  res.cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      res.cost += res.flow[i * m + j] * cost[i * m + j];
    }
  }
  double violation = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double rc = cost[i * m + j] + pi[i] - pi[n + j];
      violation = std::max(violation, -rc);
      if (res.flow[i * m + j] > 1e-15) {
        violation = std::max(violation, std::abs(rc));
      }
    }
  }
  res.max_optimality_violation = violation;
  return res;
}

}  // namespace softsim
