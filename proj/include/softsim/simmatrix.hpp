#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/dense_matrix.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/hash.hpp"

namespace softsim {

struct SimParams {
  int exponent = 1;      // o
  double threshold = -1.0;  // t

  void validate() const {
    if (exponent < 1) throw ValueError("similarity exponent must be >= 1");
    if (threshold < -1.0 || threshold > 1.0) {
      throw ValueError("similarity threshold must be in [-1, 1]");
    }
  }
};

struct OrthoConfig {
  long budget = 100;  // C: max off-diagonal entries kept per column
  bool sym = true;
  bool dom = true;
  bool idf = true;

  void validate() const {
    if (budget < 1) throw ValueError("column budget must be >= 1");
  }
};

/// Rounding slack for the running dominance ledger; keeps borderline rows
/// safely inside strict diagonal dominance.
inline constexpr double kDominanceSlack = 1e-12;

namespace detail {
// Deterministic small integer power by plain repeated multiplication.
inline double ipow(double v, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= v;
  return r;
}
inline void check_unit_row(const DenseEmbeddings& e, std::size_t i) {
  double sq = 0.0;
  for (double v : e.row(i)) sq += v * v;
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw ValueError("embedding row for word '" + e.word(i) +
                     "' is not unit-normalized");
  }
}
}  // namespace detail

/// Pairwise word similarity max(t, <e_i, e_j>)^o for unit vectors.
inline double word_similarity(std::span<const double> e_i,
                              std::span<const double> e_j, SimParams params) {
  params.validate();
  if (e_i.size() != e_j.size()) throw ValueError("word_similarity: dimension mismatch");
  auto unit = [](std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    return std::abs(std::sqrt(sq) - 1.0) <= 1e-6;
  };
  if (!unit(e_i) || !unit(e_j)) {
    throw ValueError("word_similarity requires unit-normalized vectors");
  }
  return detail::ipow(std::max(params.threshold, dot(e_i, e_j)), params.exponent);
}

/// Sparse word similarity matrix in column-major coordinate storage. Every
/// column holds its diagonal entry (always 1) plus at most `budget`
/// off-diagonal entries.
class SparseSimMatrix {
 public:
  using Entry = std::pair<std::size_t, double>;  // (row, value)
  using Column = std::vector<Entry>;             // sorted by row

  SparseSimMatrix(std::size_t n, SimParams params, OrthoConfig config)
      : params_(params), config_(config), cols_(n) {
    for (std::size_t j = 0; j < n; ++j) cols_[j].emplace_back(j, 1.0);
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  static SparseSimMatrix identity(std::size_t n) {
    return SparseSimMatrix(n, SimParams{}, OrthoConfig{});
  }

  /// Rebuild from coordinate triplets (used by the file reader and tests).
  static SparseSimMatrix from_triplets(
      std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& t,
      SimParams params, OrthoConfig config, std::vector<std::size_t> order = {}) {
    SparseSimMatrix m(n, params, config);
    for (const auto& [i, j, v] : t) {
      if (i >= n || j >= n) throw ValueError("triplet index out of range");
      if (i == j) {
        m.cols_[j][0].second = v;
      } else {
        m.cols_[j].emplace_back(i, v);
      }
    }
    for (auto& col : m.cols_) {
      std::sort(col.begin(), col.end());
    }
    if (!order.empty()) {
      if (order.size() != n) throw ValueError("processing order has wrong length");
      m.order_ = std::move(order);
    }
    return m;
  }

  std::size_t size() const { return cols_.size(); }
  const Column& column(std::size_t j) const { return cols_[j]; }
  const SimParams& params() const { return params_; }
  const OrthoConfig& config() const { return config_; }
  const std::vector<std::size_t>& processing_order() const { return order_; }

  std::uint64_t vocab_hash() const { return vocab_hash_; }
  void set_vocab_hash(std::uint64_t h) { vocab_hash_ = h; }

  /// Stored value at (row, col); 0 when the entry is absent.
  double at(std::size_t row, std::size_t col) const {
    const auto& c = cols_[col];
    auto it = std::lower_bound(c.begin(), c.end(), row,
                               [](const Entry& e, std::size_t r) { return e.first < r; });
    return (it != c.end() && it->first == row) ? it->second : 0.0;
  }

  bool contains(std::size_t row, std::size_t col) const {
    const auto& c = cols_[col];
    auto it = std::lower_bound(c.begin(), c.end(), row,
                               [](const Entry& e, std::size_t r) { return e.first < r; });
    return it != c.end() && it->first == row;
  }

  std::size_t off_diagonal_count(std::size_t j) const { return cols_[j].size() - 1; }

  std::size_t max_off_diagonal_count() const {
    std::size_t m = 0;
    for (std::size_t j = 0; j < size(); ++j) m = std::max(m, off_diagonal_count(j));
    return m;
  }

  std::size_t nnz() const {
    std::size_t t = 0;
    for (const auto& c : cols_) t += c.size();
    return t;
  }

  bool unit_diagonal() const {
    for (std::size_t j = 0; j < size(); ++j) {
      if (!contains(j, j) || at(j, j) != 1.0) return false;
    }
    return true;
  }

  /// Exact transpose equality (pattern and values).
  bool is_transpose_equal() const {
    for (std::size_t j = 0; j < size(); ++j) {
      for (const auto& [r, v] : cols_[j]) {
        if (!contains(j, r) || at(j, r) != v) return false;
      }
    }
    return true;
  }

  /// Strict row-wise diagonal dominance: sum of off-diagonal magnitudes in
  /// every row stays below the diagonal.
  bool is_strictly_diagonally_dominant() const {
    std::vector<double> off_sum(size(), 0.0);
    std::vector<double> diag(size(), 0.0);
    for (std::size_t j = 0; j < size(); ++j) {
      for (const auto& [r, v] : cols_[j]) {
        if (r == j) {
          diag[r] = v;
        } else {
          off_sum[r] += std::abs(v);
        }
      }
    }
    for (std::size_t r = 0; r < size(); ++r) {
      if (!(off_sum[r] < diag[r])) return false;
    }
    return true;
  }

  std::uint64_t content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (std::size_t j = 0; j < size(); ++j) {
      for (const auto& [r, v] : cols_[j]) {
        h = fnv1a64_mix(static_cast<std::uint64_t>(r), h);
        h = fnv1a64_mix(v, h);
      }
    }
    return h;
  }

 private:
  SimParams params_;
  OrthoConfig config_;
  std::vector<Column> cols_;
  std::vector<std::size_t> order_;  // column processing order
  std::uint64_t vocab_hash_ = 0;
};

/// Dense word similarity matrix. Guarded: refuses shapes whose dense storage
/// would exceed `max_bytes`; callers hitting the guard should build the
/// sparse matrix directly from the embeddings instead.
inline DenseMatrix build_dense(const DenseEmbeddings& e, SimParams params,
                               std::size_t max_bytes = std::size_t{2} << 30) {
  params.validate();
  if (!e.normalized()) throw ValueError("build_dense requires row-normalized embeddings");
  const std::size_t n = e.size();
  if (n * n > max_bytes / sizeof(double)) {
    throw ValueError(
        "dense similarity matrix of " + std::to_string(n) + "x" + std::to_string(n) +
        " doubles exceeds the memory guard; build the sparse matrix directly "
        "from the embeddings");
  }
  for (std::size_t i = 0; i < n; ++i) detail::check_unit_row(e, i);
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s.at(i, i) = detail::ipow(std::max(params.threshold, 1.0), params.exponent);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = detail::ipow(
          std::max(params.threshold, dot(e.row(i), e.row(j))), params.exponent);
      s.at(i, j) = v;
      s.at(j, i) = v;
    }
  }
  return s;
}

/// Greedy sparsification of the word similarity matrix.
///
/// Columns are visited in descending-IDF order (idf on) or ascending id order
/// (idf off; ties on equal IDF also fall back to ascending id). Each column
/// starts with its unit diagonal. Candidate off-diagonal values are tried in
/// descending value order (ties: lower row id first) and a candidate is
/// inserted only if
///   (a) the column still has budget left, and with sym also the mirror
///       column (a mirrored insertion consumes the mirror's budget), and
///   (b) with dom the affected row sums stay strictly diagonally dominant
///       under the running ledger.
/// Values clamped up to t^o by the threshold stay candidates unless they are
/// exactly zero; zeros are never stored. Never materializes the dense matrix:
/// scoring works column by column against the embedding rows.
inline SparseSimMatrix orthogonalize(const DenseEmbeddings& e, SimParams params,
                                     OrthoConfig config,
                                     std::span<const double> idf_values = {}) {
  params.validate();
  config.validate();
  if (!e.normalized()) throw ValueError("orthogonalize requires row-normalized embeddings");
  const std::size_t n = e.size();
  for (std::size_t i = 0; i < n; ++i) detail::check_unit_row(e, i);
  if (config.idf && idf_values.size() != n) {
    throw ValueError("idf ordering requested but no idf values supplied");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.idf) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (idf_values[a] != idf_values[b]) return idf_values[a] > idf_values[b];
      return a < b;
    });
  }

  const auto budget = static_cast<std::size_t>(config.budget);
  std::vector<std::vector<SparseSimMatrix::Entry>> cols(n);
  std::vector<std::unordered_set<std::size_t>> present(n);
  std::vector<std::size_t> off_count(n, 0);
  std::vector<double> row_sum(n, 0.0);  // off-diagonal magnitudes per row

  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n);
  for (std::size_t j : order) {
    if (off_count[j] >= budget) continue;
    cand.clear();
    const auto ej = e.row(j);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const double v = detail::ipow(std::max(params.threshold, dot(e.row(i), ej)),
                                    params.exponent);
      if (v == 0.0) continue;
      if (present[j].count(i)) continue;  // mirrored in from an earlier column
      cand.emplace_back(v, i);
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [v, i] : cand) {
      if (off_count[j] >= budget) break;
      if (config.sym && off_count[i] >= budget) continue;
      const double mag = std::abs(v);
      if (config.dom) {
        if (!(row_sum[i] + mag < 1.0 - kDominanceSlack)) continue;
        if (config.sym && !(row_sum[j] + mag < 1.0 - kDominanceSlack)) continue;
      }
      cols[j].emplace_back(i, v);
      present[j].insert(i);
      off_count[j]++;
      row_sum[i] += mag;
      if (config.sym) {
        cols[i].emplace_back(j, v);
        present[i].insert(j);
        off_count[i]++;
        row_sum[j] += mag;
      }
    }
  }

  SparseSimMatrix out(n, params, config);
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  std::size_t total = 0;
  for (const auto& c : cols) total += c.size();
  triplets.reserve(total);
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [r, v] : cols[j]) triplets.emplace_back(r, j, v);
  }
  out = SparseSimMatrix::from_triplets(n, triplets, params, config, order);
  return out;
}

/// Convenience overload: embeddings aligned to a vocabulary, IDF taken from
/// the vocabulary's document frequencies.
inline SparseSimMatrix orthogonalize(const DenseEmbeddings& e, const Vocabulary& voc,
                                     SimParams params, OrthoConfig config) {
  if (e.size() != voc.size()) {
    throw ValueError("embeddings are not aligned with the vocabulary");
  }
  std::vector<double> idf_values;
  if (config.idf) {
    idf_values.reserve(voc.size());
    for (std::size_t i = 0; i < voc.size(); ++i) idf_values.push_back(idf(voc, i));
  }
  auto out = orthogonalize(e, params, config, idf_values);
  out.set_vocab_hash(voc.content_hash());
  return out;
}

}  // namespace softsim
