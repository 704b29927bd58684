#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/dense_matrix.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/simmatrix.hpp"
#include "softsim/transport.hpp"

namespace softsim {

// --- cosine ------------------------------------------------------------------

/// Sparse dot product over sorted entry lists.
inline double sparse_dot(const DocVector& x, const DocVector& y) {
  double s = 0.0;
  auto a = x.entries.begin();
  auto b = y.entries.begin();
  while (a != x.entries.end() && b != y.entries.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      s += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return s;
}

inline double cosine(const DocVector& x, const DocVector& y) {
  const double nx = x.l2_norm();
  const double ny = y.l2_norm();
  if (nx == 0.0 || ny == 0.0) throw ValueError("cosine of a zero vector");
  return sparse_dot(x, y) / (nx * ny);
}

// --- soft cosine ----------------------------------------------------------------

/// Normalization of the soft cosine: the default divides by the S-induced
/// norms sqrt(x'Sx) so that scm(x, x) = 1; CoordinateL2 divides by the plain
/// coordinate norms instead.
enum class ScmNorm { SInduced, CoordinateL2 };

namespace detail {

inline double quad_form(const DocVector& x, const DenseMatrix& s) {
  double q = 0.0;
  for (const auto& [i, wi] : x.entries) {
    for (const auto& [j, wj] : x.entries) {
      q += wi * s.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * wj;
    }
  }
  return q;
}

inline double bilinear(const DocVector& x, const DocVector& y, const DenseMatrix& s) {
  double q = 0.0;
  for (const auto& [i, wi] : x.entries) {
    for (const auto& [j, wj] : y.entries) {
      q += wi * s.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * wj;
    }
  }
  return q;
}

// x' S y touching only stored entries of the sparse matrix: for every entry
// (j, wj) of y, walk column j.
inline double bilinear(const DocVector& x, const DocVector& y,
                       const SparseSimMatrix& s) {
  double q = 0.0;
  for (const auto& [j, wj] : y.entries) {
    const auto& col = s.column(static_cast<std::size_t>(j));
    double cx = 0.0;
    auto xe = x.entries.begin();
    const auto xend = x.entries.end();
    for (const auto& [r, v] : col) {
      while (xe != xend && static_cast<std::size_t>(xe->first) < r) ++xe;
      if (xe == xend) break;
      if (static_cast<std::size_t>(xe->first) == r) cx += xe->second * v;
    }
    q += cx * wj;
  }
  return q;
}

inline double quad_form(const DocVector& x, const SparseSimMatrix& s) {
  return bilinear(x, x, s);
}

template <class Matrix>
double scm_impl(const DocVector& x, const DocVector& y, const Matrix& s, ScmNorm norm) {
  if (x.empty() || y.empty()) throw ValueError("soft cosine of an empty vector");
  double dx, dy;
  if (norm == ScmNorm::SInduced) {
    const double qx = quad_form(x, s);
    const double qy = quad_form(y, s);
    if (qx <= 0.0 || qy <= 0.0) {
      throw NumericalError("similarity matrix is not positive definite on the "
                           "document support (x'Sx <= 0)");
    }
    dx = std::sqrt(qx);
    dy = std::sqrt(qy);
  } else {
    dx = x.l2_norm();
    dy = y.l2_norm();
    if (dx == 0.0 || dy == 0.0) throw ValueError("soft cosine of a zero vector");
  }
  return bilinear(x, y, s) / (dx * dy);
}

}  // namespace detail

inline double scm(const DocVector& x, const DocVector& y, const DenseMatrix& s,
                  ScmNorm norm = ScmNorm::SInduced) {
  return detail::scm_impl(x, y, s, norm);
}

inline double scm(const DocVector& x, const DocVector& y, const SparseSimMatrix& s,
                  ScmNorm norm = ScmNorm::SInduced) {
  return detail::scm_impl(x, y, s, norm);
}

// --- word mover's distance ---------------------------------------------------------

/// Optimal transport plan between the unique words of two documents.
struct FlowMatrix {
  std::vector<long> x_words, y_words;    // vocabulary ids
  std::vector<double> x_mass, y_mass;    // normalized marginals (sum 1)
  std::vector<double> flow;              // row-major |x_words| x |y_words|

  double max_marginal_violation() const {
    const std::size_t n = x_words.size(), m = y_words.size();
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) row += flow[i * m + j];
      viol = std::max(viol, std::abs(row - x_mass[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += flow[i * m + j];
      viol = std::max(viol, std::abs(col - y_mass[j]));
    }
    return viol;
  }
};

namespace detail {
inline void check_doc_for_transport(const DocVector& x, const DenseEmbeddings& emb) {
  if (x.empty()) {
    throw ValueError("document is empty after out-of-vocabulary removal");
  }
  for (const auto& [id, w] : x.entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= emb.size()) {
      throw ValueError("document references a word id outside the embeddings");
    }
  }
}

inline std::vector<double> normalized_mass(const DocVector& x) {
  double total = 0.0;
  for (const auto& [id, w] : x.entries) total += w;
  std::vector<double> mass;
  mass.reserve(x.entries.size());
  for (const auto& [id, w] : x.entries) mass.push_back(w / total);
  return mass;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}
}  // namespace detail

/// Exact word mover's distance: minimum-cost transport of x's normalized word
/// mass to y's, with Euclidean embedding distances as costs. Both marginal
/// constraints are enforced and the solver's reduced-cost certificate is
/// checked before the result is returned.
inline std::pair<double, FlowMatrix> wmd_with_flow(const DocVector& x,
                                                   const DocVector& y,
                                                   const DenseEmbeddings& emb) {
  detail::check_doc_for_transport(x, emb);
  detail::check_doc_for_transport(y, emb);
  FlowMatrix fm;
  fm.x_mass = detail::normalized_mass(x);
  fm.y_mass = detail::normalized_mass(y);
  for (const auto& [id, w] : x.entries) fm.x_words.push_back(id);
  for (const auto& [id, w] : y.entries) fm.y_words.push_back(id);

  const std::size_t n = fm.x_words.size(), m = fm.y_words.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ei = emb.row(static_cast<std::size_t>(fm.x_words[i]));
    for (std::size_t j = 0; j < m; ++j) {
      cost[i * m + j] =
          detail::euclidean(ei, emb.row(static_cast<std::size_t>(fm.y_words[j])));
    }
  }
  auto res = solve_transport(fm.x_mass, fm.y_mass, cost);
  if (res.max_optimality_violation > 1e-9) {
    throw NumericalError("transport optimality certificate failed");
  }
  fm.flow = std::move(res.flow);
  return {res.cost, std::move(fm)};
}

inline double wmd(const DocVector& x, const DocVector& y, const DenseEmbeddings& emb) {
  return wmd_with_flow(x, y, emb).first;
}

/// Word centroid distance: Euclidean distance between the mass-weighted
/// embedding centroids. A cheap lower bound on the word mover's distance.
inline double wcd(const DocVector& x, const DocVector& y, const DenseEmbeddings& emb) {
  detail::check_doc_for_transport(x, emb);
  detail::check_doc_for_transport(y, emb);
  const auto mx = detail::normalized_mass(x);
  const auto my = detail::normalized_mass(y);
  std::vector<double> cx(emb.dim(), 0.0), cy(emb.dim(), 0.0);
  for (std::size_t i = 0; i < x.entries.size(); ++i) {
    const auto e = emb.row(static_cast<std::size_t>(x.entries[i].first));
    for (std::size_t d = 0; d < e.size(); ++d) cx[d] += mx[i] * e[d];
  }
  for (std::size_t j = 0; j < y.entries.size(); ++j) {
    const auto e = emb.row(static_cast<std::size_t>(y.entries[j].first));
    for (std::size_t d = 0; d < e.size(); ++d) cy[d] += my[j] * e[d];
  }
  return detail::euclidean(cx, cy);
}

// --- scorers ------------------------------------------------------------------

/// Direction of a pairwise document score.
enum class ScoreOrder { SimilarityDescending, DistanceAscending };

/// Pairwise document scorer used by classification and benchmarking. Scoring
/// is read-only once prepare() has filled the measure-specific norm caches;
/// concurrent use should give each worker its own clone().
class DocScorer {
 public:
  virtual ~DocScorer() = default;
  virtual ScoreOrder order() const = 0;
  virtual std::string name() const = 0;
  virtual void prepare(std::span<const DocVector> docs) const {}
  virtual double score(const DocVector& a, const DocVector& b) const = 0;
  virtual std::unique_ptr<DocScorer> clone() const = 0;

 protected:
  /// Score that ranks an empty (all out-of-vocabulary) document last.
  double worst() const {
    return order() == ScoreOrder::SimilarityDescending
               ? -std::numeric_limits<double>::infinity()
               : std::numeric_limits<double>::infinity();
  }
};

class BowCosineScorer final : public DocScorer {
 public:
  ScoreOrder order() const override { return ScoreOrder::SimilarityDescending; }
  std::string name() const override { return "bow-cosine"; }

  void prepare(std::span<const DocVector> docs) const override {
    for (const auto& d : docs) d.norm_cache = d.l2_norm();
  }

  double score(const DocVector& a, const DocVector& b) const override {
    if (a.empty() || b.empty()) return worst();
    const double na = a.norm_cache ? *a.norm_cache : a.l2_norm();
    const double nb = b.norm_cache ? *b.norm_cache : b.l2_norm();
    return sparse_dot(a, b) / (na * nb);
  }

  std::unique_ptr<DocScorer> clone() const override {
    return std::make_unique<BowCosineScorer>(*this);
  }
};

/// Soft cosine over the sparse similarity matrix. Uses a scatter workspace so
/// one pair costs O(p_a + p_b * C).
class ScmSparseScorer final : public DocScorer {
 public:
  explicit ScmSparseScorer(const SparseSimMatrix& s, ScmNorm norm = ScmNorm::SInduced)
      : s_(&s), norm_(norm), scatter_(s.size(), 0.0) {}

  ScmSparseScorer(const ScmSparseScorer& other)
      : s_(other.s_), norm_(other.norm_), scatter_(other.s_->size(), 0.0) {}

  ScoreOrder order() const override { return ScoreOrder::SimilarityDescending; }
  std::string name() const override { return "scm-ortho"; }

  void prepare(std::span<const DocVector> docs) const override {
    for (const auto& d : docs) d.norm_cache = norm_value(d);
  }

  double score(const DocVector& a, const DocVector& b) const override {
    if (a.empty() || b.empty()) return worst();
    const double na = a.norm_cache ? *a.norm_cache : norm_value(a);
    const double nb = b.norm_cache ? *b.norm_cache : norm_value(b);
    // scatter a, then accumulate column-wise over b
    for (const auto& [i, w] : a.entries) scatter_[static_cast<std::size_t>(i)] = w;
    double cross = 0.0;
    for (const auto& [j, wj] : b.entries) {
      double cx = 0.0;
      for (const auto& [r, v] : s_->column(static_cast<std::size_t>(j))) {
        cx += scatter_[r] * v;
      }
      cross += cx * wj;
    }
    for (const auto& [i, w] : a.entries) scatter_[static_cast<std::size_t>(i)] = 0.0;
    return cross / (na * nb);
  }

  std::unique_ptr<DocScorer> clone() const override {
    return std::make_unique<ScmSparseScorer>(*this);
  }

 private:
  double norm_value(const DocVector& d) const {
    if (norm_ == ScmNorm::CoordinateL2) {
      const double n = d.l2_norm();
      if (n == 0.0) throw ValueError("soft cosine of a zero vector");
      return n;
    }
    const double q = detail::quad_form(d, *s_);
    if (q <= 0.0) {
      throw NumericalError("similarity matrix is not positive definite on the "
                           "document support (x'Sx <= 0)");
    }
    return std::sqrt(q);
  }

  const SparseSimMatrix* s_;
  ScmNorm norm_;
  mutable std::vector<double> scatter_;
};

/// Soft cosine over the dense similarity matrix (the non-sparsified path).
class ScmDenseScorer final : public DocScorer {
 public:
  explicit ScmDenseScorer(const DenseMatrix& s, ScmNorm norm = ScmNorm::SInduced)
      : s_(&s), norm_(norm) {}

  ScoreOrder order() const override { return ScoreOrder::SimilarityDescending; }
  std::string name() const override { return "scm"; }

  void prepare(std::span<const DocVector> docs) const override {
    for (const auto& d : docs) d.norm_cache = norm_value(d);
  }

  double score(const DocVector& a, const DocVector& b) const override {
    if (a.empty() || b.empty()) return worst();
    const double na = a.norm_cache ? *a.norm_cache : norm_value(a);
    const double nb = b.norm_cache ? *b.norm_cache : norm_value(b);
    return detail::bilinear(a, b, *s_) / (na * nb);
  }

  std::unique_ptr<DocScorer> clone() const override {
    return std::make_unique<ScmDenseScorer>(*this);
  }

 private:
  double norm_value(const DocVector& d) const {
    if (norm_ == ScmNorm::CoordinateL2) {
      const double n = d.l2_norm();
      if (n == 0.0) throw ValueError("soft cosine of a zero vector");
      return n;
    }
    const double q = detail::quad_form(d, *s_);
    if (q <= 0.0) {
      throw NumericalError("similarity matrix is not positive definite on the "
                           "document support (x'Sx <= 0)");
    }
    return std::sqrt(q);
  }

  const DenseMatrix* s_;
  ScmNorm norm_;
};

class WmdScorer final : public DocScorer {
 public:
  explicit WmdScorer(const DenseEmbeddings& emb) : emb_(&emb) {}

  ScoreOrder order() const override { return ScoreOrder::DistanceAscending; }
  std::string name() const override { return "wmd"; }

  double score(const DocVector& a, const DocVector& b) const override {
    if (a.empty() || b.empty()) return worst();
    return wmd(a, b, *emb_);
  }

  std::unique_ptr<DocScorer> clone() const override {
    return std::make_unique<WmdScorer>(*this);
  }

 private:
  const DenseEmbeddings* emb_;
};

class WcdScorer final : public DocScorer {
 public:
  explicit WcdScorer(const DenseEmbeddings& emb) : emb_(&emb) {}

  ScoreOrder order() const override { return ScoreOrder::DistanceAscending; }
  std::string name() const override { return "wcd"; }

  double score(const DocVector& a, const DocVector& b) const override {
    if (a.empty() || b.empty()) return worst();
    return wcd(a, b, *emb_);
  }

  std::unique_ptr<DocScorer> clone() const override {
    return std::make_unique<WcdScorer>(*this);
  }

 private:
  const DenseEmbeddings* emb_;
};

}  // namespace softsim
