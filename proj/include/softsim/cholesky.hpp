#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/simmatrix.hpp"

namespace softsim {

/// Sparse lower-triangular Cholesky factor of a sparse similarity matrix,
/// kept in column-major storage (each column sorted by row, diagonal first).
/// Row k is the regularized embedding of vocabulary word k.
struct OrthoEmbeddings {
  std::size_t n = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> cols;
  std::vector<std::size_t> processing_order;  // carried over from the input
  std::uint64_t vocab_hash = 0;

  double at(std::size_t row, std::size_t col) const {
    for (const auto& [r, v] : cols[col]) {
      if (r == row) return v;
      if (r > row) break;
    }
    return 0.0;
  }

  std::size_t nnz() const {
    std::size_t t = 0;
    for (const auto& c : cols) t += c.size();
    return t;
  }

  bool lower_triangular_positive_diagonal() const {
    for (std::size_t j = 0; j < n; ++j) {
      if (cols[j].empty() || cols[j].front().first != j || !(cols[j].front().second > 0.0)) {
        return false;
      }
      for (const auto& [r, v] : cols[j]) {
        if (r < j) return false;
      }
    }
    return true;
  }
};

/// Up-looking sparse Cholesky, S = L L^T with L lower triangular. Requires a
/// symmetric input; a symmetric matrix that is not positive definite raises
/// NumericalError instead of producing NaNs.
inline OrthoEmbeddings cholesky(const SparseSimMatrix& s) {
  if (!s.is_transpose_equal()) {
    throw NumericalError(
        "Cholesky factorization requires a symmetric matrix; rebuild with Sym");
  }
  const std::size_t n = s.size();
  OrthoEmbeddings out;
  out.n = n;
  out.cols.assign(n, {});
  out.processing_order = s.processing_order();
  out.vocab_hash = s.vocab_hash();

  std::vector<double> work(n, 0.0);
  std::vector<double> diag(n, 0.0);
  std::vector<std::pair<std::size_t, double>> row_entries;
  for (std::size_t i = 0; i < n; ++i) {
    // Row i of the input, read from column i by symmetry.
    double a_ii = 0.0;
    for (const auto& [r, v] : s.column(i)) {
      if (r < i) {
        work[r] = v;
      } else if (r == i) {
        a_ii = v;
      }
    }
    // Forward substitution against the rows built so far.
    row_entries.clear();
    double sq = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double b = work[j];
      if (b == 0.0) continue;
      work[j] = 0.0;
      const double x = b / diag[j];
      sq += x * x;
      row_entries.emplace_back(j, x);
      const auto& colj = out.cols[j];
      for (std::size_t k = 1; k < colj.size(); ++k) {  // entry 0 is the diagonal
        work[colj[k].first] -= colj[k].second * x;
      }
    }
    const double d = a_ii - sq;
    if (!(d > 0.0)) {
      throw NumericalError("matrix is not positive definite (failed at row " +
                           std::to_string(i) + ")");
    }
    diag[i] = std::sqrt(d);
    out.cols[i].emplace_back(i, diag[i]);
    for (const auto& [j, x] : row_entries) out.cols[j].emplace_back(i, x);
  }
  return out;
}

namespace detail {
/// All structurally nonzero entries of L L^T on or below the diagonal,
/// keyed by row * n + col with row >= col.
inline std::unordered_map<std::uint64_t, double> gram_lower(const OrthoEmbeddings& f) {
  std::unordered_map<std::uint64_t, double> g;
  const auto n = static_cast<std::uint64_t>(f.n);
  for (const auto& col : f.cols) {
    for (std::size_t a = 0; a < col.size(); ++a) {
      for (std::size_t b = a; b < col.size(); ++b) {
        // col entries are sorted by row, so col[b].first >= col[a].first.
        g[static_cast<std::uint64_t>(col[b].first) * n + col[a].first] +=
            col[a].second * col[b].second;
      }
    }
  }
  return g;
}
}  // namespace detail

/// max |(L L^T)_ij - S_ij| over the union of both patterns.
inline double max_reconstruction_error(const OrthoEmbeddings& f,
                                       const SparseSimMatrix& s) {
  if (f.n != s.size()) throw ValueError("factor and matrix dimensions differ");
  auto gram = detail::gram_lower(f);
  const auto n = static_cast<std::uint64_t>(f.n);
  double max_err = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    for (const auto& [r, v] : s.column(j)) {
      if (r < j) continue;  // check the lower triangle once
      const auto key = static_cast<std::uint64_t>(r) * n + j;
      auto it = gram.find(key);
      const double got = it == gram.end() ? 0.0 : it->second;
      max_err = std::max(max_err, std::abs(got - v));
      if (it != gram.end()) gram.erase(it);
    }
  }
  for (const auto& [key, v] : gram) {
    max_err = std::max(max_err, std::abs(v));  // structural fill, exact value 0
  }
  return max_err;
}

struct OrthoVerifyReport {
  double max_deviation = 0.0;     // over numerically nonzero row pairs
  std::size_t nonzero_pairs = 0;  // unordered off-diagonal pairs
  std::size_t zero_pairs = 0;
  bool passed(double tol = 1e-9) const { return max_deviation <= tol; }
};

/// Checks the defining property of regularized embeddings: every numerically
/// nonzero inner product of factor rows must equal the corresponding inner
/// product of the original embedding rows. Only valid for factors built from
/// a similarity matrix with t = -1 and o = 1 over unit-normalized embeddings.
inline OrthoVerifyReport verify_orthogonalized(const DenseEmbeddings& e,
                                               const OrthoEmbeddings& f,
                                               SimParams params,
                                               double zero_tol = 1e-10) {
  if (params.exponent != 1 || params.threshold != -1.0) {
    throw ValueError(
        "verification requires t = -1 and o = 1; other parameters clamp or "
        "warp similarities and the factor rows cannot reproduce them");
  }
  if (!e.normalized()) throw ValueError("verification requires normalized embeddings");
  if (e.size() != f.n) throw ValueError("embeddings and factor dimensions differ");

  const auto gram = detail::gram_lower(f);
  const auto n = static_cast<std::uint64_t>(f.n);
  OrthoVerifyReport report;
  for (const auto& [key, inner] : gram) {
    const auto row = static_cast<std::size_t>(key / n);
    const auto col = static_cast<std::size_t>(key % n);
    if (row == col) {
      report.max_deviation =
          std::max(report.max_deviation, std::abs(inner - dot(e.row(row), e.row(col))));
      continue;
    }
    if (std::abs(inner) <= zero_tol) continue;  // counted as zero below
    report.nonzero_pairs++;
    report.max_deviation =
        std::max(report.max_deviation, std::abs(inner - dot(e.row(row), e.row(col))));
  }
  const std::size_t total_pairs = f.n * (f.n - 1) / 2;
  report.zero_pairs = total_pairs - report.nonzero_pairs;
  return report;
}

}  // namespace softsim
