#pragma once

// Test-only reference implementation of the greedy similarity-matrix
// sparsification. Written independently of the production code: it
// materializes the dense similarity matrix first and tracks budgets, presence
// and row sums with plain maps, following the stated rules directly. Used to
// pin down insertion order and budget accounting on small random instances.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "softsim/embeddings.hpp"

namespace refimpl {

struct RefConfig {
  std::size_t budget = 1;
  bool sym = true;
  bool dom = true;
  bool idf = false;
  std::vector<double> idf_values;  // required when idf is on
};

using RefMatrix = std::map<std::pair<std::size_t, std::size_t>, double>;  // (row, col)

inline double ref_pow(double base, int e) {
  double prod = 1.0;
  while (e-- > 0) prod *= base;
  return prod;
}

inline RefMatrix reference_orthogonalize(const softsim::DenseEmbeddings& emb,
                                         int o, double t, const RefConfig& cfg) {
  const std::size_t n = emb.size();

  // Dense similarity matrix.
  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        s[i][j] = ref_pow(std::max(t, 1.0), o);
        continue;
      }
      double cos = 0.0;
      for (std::size_t d = 0; d < emb.dim(); ++d) cos += emb.row(i)[d] * emb.row(j)[d];
      s[i][j] = ref_pow(std::max(t, cos), o);
    }
  }

  // Column visiting order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (cfg.idf) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (cfg.idf_values[a] != cfg.idf_values[b]) {
        return cfg.idf_values[a] > cfg.idf_values[b];
      }
      return a < b;
    });
  }

  RefMatrix out;
  std::map<std::size_t, std::size_t> off_count;
  std::map<std::size_t, double> row_sum;
  for (std::size_t j = 0; j < n; ++j) out[{j, j}] = 1.0;

  for (std::size_t j : order) {
    // All candidate rows, best value first, lower row id on ties.
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j || s[i][j] == 0.0) continue;
      if (out.count({i, j})) continue;
      cand.push_back({s[i][j], i});
    }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [value, i] : cand) {
      if (off_count[j] >= cfg.budget) break;
      if (cfg.sym && off_count[i] >= cfg.budget) continue;
      const double mag = value < 0 ? -value : value;
      if (cfg.dom) {
        const bool row_i_ok = row_sum[i] + mag < 1.0 - 1e-12;
        const bool row_j_ok = !cfg.sym || row_sum[j] + mag < 1.0 - 1e-12;
        if (!row_i_ok || !row_j_ok) continue;
      }
      out[{i, j}] = value;
      off_count[j] += 1;
      row_sum[i] += mag;
      if (cfg.sym) {
        out[{j, i}] = value;
        off_count[i] += 1;
        row_sum[j] += mag;
      }
    }
  }
  return out;
}

}  // namespace refimpl
