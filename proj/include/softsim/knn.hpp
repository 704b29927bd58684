#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/error.hpp"
#include "softsim/measures.hpp"
#include "softsim/simmatrix.hpp"

namespace softsim {

// --- small thread helper ---------------------------------------------------

/// Run fn(i) for i in [0, n) on up to `threads` workers. Results must not
/// depend on scheduling; each index is processed exactly once.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  const auto workers = static_cast<std::size_t>(
      std::min<long>(threads, static_cast<long>(n)));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i, w);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// --- k nearest neighbors -----------------------------------------------------

struct LabeledVector {
  DocVector vec;
  std::string label;
  std::string id;  // stable tie-break key
};

/// Train indices sorted from nearest to farthest for one test document.
/// Score ties break on the stable document id.
inline std::vector<std::size_t> rank_neighbors(std::span<const LabeledVector> train,
                                               const DocVector& test,
                                               const DocScorer& scorer) {
  std::vector<double> scores(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    scores[i] = scorer.score(train[i].vec, test);
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool similarity = scorer.order() == ScoreOrder::SimilarityDescending;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) {
      return similarity ? scores[a] > scores[b] : scores[a] < scores[b];
    }
    return train[a].id < train[b].id;
  });
  return order;
}

/// Majority class of the k nearest neighbors. A vote tie goes to the class of
/// the nearest neighbor that belongs to one of the tied classes.
inline std::string vote(std::span<const LabeledVector> train,
                        std::span<const std::size_t> ranked, int k) {
  std::map<std::string, int> votes;
  for (int i = 0; i < k; ++i) votes[train[ranked[static_cast<std::size_t>(i)]].label]++;
  int best = 0;
  for (const auto& [label, c] : votes) best = std::max(best, c);
  for (int i = 0; i < k; ++i) {
    const auto& label = train[ranked[static_cast<std::size_t>(i)]].label;
    if (votes[label] == best) return label;
  }
  return train[ranked[0]].label;  // unreachable
}

inline std::vector<std::string> knn_classify(std::span<const LabeledVector> train,
                                             std::span<const DocVector> test, int k,
                                             const DocScorer& scorer,
                                             int threads = 1) {
  if (train.empty()) throw ValueError("knn_classify: empty training set");
  if (k < 1 || static_cast<std::size_t>(k) > train.size()) {
    throw ValueError("knn_classify: k must be in [1, |train|]");
  }
  std::vector<std::string> labels(test.size());
  std::vector<std::unique_ptr<DocScorer>> clones;
  const auto workers = static_cast<std::size_t>(std::max(threads, 1));
  for (std::size_t w = 0; w < workers; ++w) clones.push_back(scorer.clone());
  parallel_for(test.size(), threads, [&](std::size_t i, std::size_t w) {
    const auto ranked = rank_neighbors(train, test[i], *clones[w]);
    labels[i] = vote(train, ranked, k);
  });
  return labels;
}

// --- statistics ------------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Approximate 95% binomial interval from the adjusted proportion
/// (x + 2) / (n + 4), clipped to [0, 1].
inline Interval agresti_interval(long long errors, long long n) {
  if (n < 1) throw ValueError("agresti_interval: n must be >= 1");
  if (errors < 0 || errors > n) throw ValueError("agresti_interval: errors out of range");
  const double p = (static_cast<double>(errors) + 2.0) / (static_cast<double>(n) + 4.0);
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / (static_cast<double>(n) + 4.0));
  return Interval{std::max(0.0, p - half), std::min(1.0, p + half)};
}

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<long long> counts;  // row-major (gold, predicted)

  long long at(std::size_t gold, std::size_t predicted) const {
    return counts[gold * classes.size() + predicted];
  }
  long long total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
  }
  long long trace() const {
    long long t = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) t += at(i, i);
    return t;
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const std::string> gold,
                                        std::span<const std::string> predicted,
                                        std::span<const std::string> classes) {
  if (gold.size() != predicted.size()) {
    throw ValueError("confusion_matrix: label lists differ in length");
  }
  ConfusionMatrix cm;
  cm.classes.assign(classes.begin(), classes.end());
  cm.counts.assign(classes.size() * classes.size(), 0);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cm.classes.size(); ++i) index[cm.classes[i]] = i;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto g = index.find(gold[i]);
    auto p = index.find(predicted[i]);
    if (g == index.end()) throw ValueError("unknown gold label: " + gold[i]);
    if (p == index.end()) throw ValueError("unknown predicted label: " + predicted[i]);
    cm.counts[g->second * cm.classes.size() + p->second]++;
  }
  return cm;
}

// --- measures and parameter grids ----------------------------------------------

enum class Measure { BowCosine, Scm, ScmOrtho, Wmd };

inline std::string measure_name(Measure m) {
  switch (m) {
    case Measure::BowCosine: return "bow";
    case Measure::Scm: return "scm";
    case Measure::ScmOrtho: return "scm-ortho";
    case Measure::Wmd: return "wmd";
  }
  return "?";
}

inline Measure parse_measure(const std::string& name) {
  if (name == "bow" || name == "bow-cosine") return Measure::BowCosine;
  if (name == "scm") return Measure::Scm;
  if (name == "scm-ortho") return Measure::ScmOrtho;
  if (name == "wmd") return Measure::Wmd;
  throw ValueError("unknown measure '" + name +
                   "'; valid measures: bow, scm, scm-ortho, wmd");
}

/// One point of the tuning grid. Fields that a measure does not use keep
/// their defaults and are ignored by evaluation.
struct GridPoint {
  Measure measure = Measure::ScmOrtho;
  int o = 1;
  double t = -1.0;
  double s = 0.0;
  int k = 1;
  long C = 100;
  bool idf = true;
  bool sym = true;
  bool dom = true;

  /// Lexicographic tuple used for deterministic tie-breaking.
  auto key() const { return std::tie(o, t, s, k, C, idf, sym, dom); }
};

struct GridSpec {
  Measure measure = Measure::ScmOrtho;
  std::vector<int> o{1, 2, 3, 4};
  std::vector<double> t{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> s{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<int> k{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
  std::vector<long> C{100, 200, 400, 800};
  std::vector<bool> idf{false, true};
  std::vector<bool> sym{false, true};
  std::vector<bool> dom{false, true};

  void validate() const {
    if (o.empty() || t.empty() || s.empty() || k.empty() || C.empty() ||
        idf.empty() || sym.empty() || dom.empty()) {
      throw ValueError("grid axes must be nonempty");
    }
    for (int kk : k) {
      if (kk < 1 || kk % 2 == 0) throw ValueError("grid k values must be odd and >= 1");
    }
  }

  /// Cartesian product of the axes the measure tunes. Bag-of-words and the
  /// word mover's distance tune only k.
  std::vector<GridPoint> enumerate() const {
    validate();
    const bool scm_family = measure == Measure::Scm || measure == Measure::ScmOrtho;
    const bool ortho = measure == Measure::ScmOrtho;
    const std::vector<int> o_axis = scm_family ? o : std::vector<int>{1};
    const std::vector<double> t_axis = scm_family ? t : std::vector<double>{-1.0};
    const std::vector<double> s_axis = scm_family ? s : std::vector<double>{0.0};
    const std::vector<long> c_axis = ortho ? C : std::vector<long>{100};
    const std::vector<bool> idf_axis = ortho ? idf : std::vector<bool>{true};
    const std::vector<bool> sym_axis = ortho ? sym : std::vector<bool>{true};
    const std::vector<bool> dom_axis = ortho ? dom : std::vector<bool>{true};
    std::vector<GridPoint> points;
    for (int oo : o_axis)
      for (double tt : t_axis)
        for (double ss : s_axis)
          for (int kk : k)
            for (long cc : c_axis)
              for (bool ii : idf_axis)
                for (bool yy : sym_axis)
                  for (bool dd : dom_axis) {
                    GridPoint p;
                    p.measure = measure;
                    p.o = oo;
                    p.t = tt;
                    p.s = ss;
                    p.k = kk;
                    p.C = cc;
                    p.idf = ii;
                    p.sym = yy;
                    p.dom = dd;
                    points.push_back(p);
                  }
    return points;
  }
};

// --- evaluation pipeline ---------------------------------------------------------

struct ClassificationReport {
  double test_error = 0.0;
  ConfusionMatrix confusion;
  Interval interval95;
  std::vector<std::pair<std::string, std::string>> parameters;
  double docs_per_sec = 0.0;
  std::uint64_t seed = 0;
  std::size_t test_size = 0;
  long long test_errors = 0;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::vector<std::pair<std::string, std::string>> point_parameters(
    const GridPoint& p) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("measure", measure_name(p.measure));
  out.emplace_back("k", std::to_string(p.k));
  if (p.measure == Measure::Scm || p.measure == Measure::ScmOrtho) {
    out.emplace_back("o", std::to_string(p.o));
    out.emplace_back("t", fmt_double(p.t));
    out.emplace_back("s", fmt_double(p.s));
  }
  if (p.measure == Measure::ScmOrtho) {
    out.emplace_back("C", std::to_string(p.C));
    out.emplace_back("idf", p.idf ? "1" : "0");
    out.emplace_back("sym", p.sym ? "1" : "0");
    out.emplace_back("dom", p.dom ? "1" : "0");
  }
  return out;
}

/// Vectorized train/test corpus with everything a scorer needs.
struct PreparedCorpus {
  std::vector<LabeledVector> train;
  std::vector<DocVector> test;
  Vocabulary vocab;
  DenseEmbeddings aligned_raw;   // vocabulary order, as loaded
  DenseEmbeddings aligned_unit;  // vocabulary order, row-normalized
};

inline PreparedCorpus prepare_corpus(const std::vector<Document>& train_docs,
                                     const std::vector<Document>& test_docs,
                                     const DenseEmbeddings* emb,
                                     const GridPoint& p) {
  PreparedCorpus pc;
  if (p.measure == Measure::BowCosine) {
    pc.vocab = build_vocabulary(train_docs);
  } else {
    if (!emb) throw ValueError("measure requires word embeddings");
    pc.vocab = build_vocabulary(train_docs, *emb);
  }
  if (emb && p.measure != Measure::BowCosine) {
    pc.aligned_raw = align_embeddings(*emb, pc.vocab);
    pc.aligned_unit = normalize_rows(pc.aligned_raw);
  }

  const bool dtb = p.measure == Measure::Scm || p.measure == Measure::ScmOrtho;
  double avg_len = 0.0;
  if (dtb) {
    avg_len = mean_retained_length(train_docs, pc.vocab);
    if (avg_len <= 0.0) {
      throw ValueError("training collection has no in-vocabulary tokens");
    }
  }
  auto vectorize = [&](const Document& d) {
    return dtb ? dtb_vector(d, pc.vocab, avg_len, p.s) : bow_vector(d, pc.vocab);
  };
  pc.train.reserve(train_docs.size());
  for (const auto& d : train_docs) {
    pc.train.push_back(LabeledVector{vectorize(d), d.label, d.id});
  }
  pc.test.reserve(test_docs.size());
  for (const auto& d : test_docs) pc.test.push_back(vectorize(d));
  return pc;
}

struct ScorerBundle {
  std::unique_ptr<DocScorer> scorer;
  // Owning storage for the matrices the scorer points into.
  std::shared_ptr<SparseSimMatrix> sparse;
  std::shared_ptr<DenseMatrix> dense;
};

inline ScorerBundle make_scorer(const PreparedCorpus& pc, const GridPoint& p,
                                const SparseSimMatrix* prebuilt_sparse = nullptr) {
  ScorerBundle b;
  switch (p.measure) {
    case Measure::BowCosine:
      b.scorer = std::make_unique<BowCosineScorer>();
      break;
    case Measure::Scm: {
      b.dense = std::make_shared<DenseMatrix>(
          build_dense(pc.aligned_unit, SimParams{p.o, p.t}));
      b.scorer = std::make_unique<ScmDenseScorer>(*b.dense);
      break;
    }
    case Measure::ScmOrtho: {
      if (prebuilt_sparse) {
        b.scorer = std::make_unique<ScmSparseScorer>(*prebuilt_sparse);
      } else {
        b.sparse = std::make_shared<SparseSimMatrix>(
            orthogonalize(pc.aligned_unit, pc.vocab, SimParams{p.o, p.t},
                          OrthoConfig{p.C, p.sym, p.dom, p.idf}));
        b.scorer = std::make_unique<ScmSparseScorer>(*b.sparse);
      }
      break;
    }
    case Measure::Wmd:
      b.scorer = std::make_unique<WmdScorer>(pc.aligned_raw);
      break;
  }
  return b;
}

}  // namespace detail

/// Classify the test split with fixed parameters and report test error,
/// confusion matrix, 95% interval and scoring throughput.
inline ClassificationReport evaluate(const LabeledDataset& ds,
                                     const DenseEmbeddings* emb, const GridPoint& p,
                                     std::uint64_t seed, int threads = 1,
                                     const SparseSimMatrix* prebuilt_sparse = nullptr) {
  auto pc = detail::prepare_corpus(ds.train, ds.test, emb, p);
  auto bundle = detail::make_scorer(pc, p, prebuilt_sparse);
  const int k = std::min<int>(p.k, static_cast<int>(pc.train.size()));

  bundle.scorer->prepare(pc.test);
  for (auto& lv : pc.train) bundle.scorer->prepare(std::span(&lv.vec, 1));

  const auto t0 = std::chrono::steady_clock::now();
  auto predicted = knn_classify(pc.train, pc.test, k, *bundle.scorer, threads);
  const auto t1 = std::chrono::steady_clock::now();

  std::vector<std::string> gold;
  gold.reserve(ds.test.size());
  for (const auto& d : ds.test) gold.push_back(d.label);

  ClassificationReport report;
  report.confusion = confusion_matrix(gold, predicted, ds.classes);
  long long errors = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] != predicted[i]) errors++;
  }
  report.test_errors = errors;
  report.test_size = gold.size();
  report.test_error =
      gold.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(gold.size());
  report.interval95 = agresti_interval(errors, static_cast<long long>(gold.size()));
  report.parameters = detail::point_parameters(p);
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  report.docs_per_sec = secs > 0.0 ? static_cast<double>(ds.test.size()) / secs : 0.0;
  report.seed = seed;
  return report;
}

// --- grid search ------------------------------------------------------------------

struct GridSearchResult {
  GridPoint best;
  double best_error = 1.0;
  std::vector<std::pair<GridPoint, double>> log;  // every evaluated combination
};

/// Exhaustive search over the grid, scored by validation error on a seeded
/// stratified holdout of the training set. Ties pick the lexicographically
/// smallest parameter tuple. Combinations sharing a similarity matrix or a
/// weighting are evaluated together, so the full grid stays tractable.
inline GridSearchResult grid_search(const std::vector<Document>& train_docs,
                                    const DenseEmbeddings* emb, const GridSpec& spec,
                                    double holdout_fraction, std::uint64_t seed,
                                    int threads = 1) {
  spec.validate();
  auto [tune, validation] = split_holdout_stratified(train_docs, holdout_fraction, seed);
  if (tune.empty() || validation.empty()) {
    throw ValueError("holdout produced an empty split");
  }

  GridSearchResult result;
  const bool scm_family = spec.measure == Measure::Scm || spec.measure == Measure::ScmOrtho;

  // Axes that change the scorer (similarity matrix); weighting (s) and k are
  // evaluated inside.
  struct OuterPoint {
    int o = 1;
    double t = -1.0;
    long C = 100;
    bool idf = true, sym = true, dom = true;
  };
  std::vector<OuterPoint> outers;
  if (spec.measure == Measure::ScmOrtho) {
    for (int oo : spec.o)
      for (double tt : spec.t)
        for (long cc : spec.C)
          for (bool ii : spec.idf)
            for (bool yy : spec.sym)
              for (bool dd : spec.dom) outers.push_back({oo, tt, cc, ii, yy, dd});
  } else if (spec.measure == Measure::Scm) {
    for (int oo : spec.o)
      for (double tt : spec.t) outers.push_back({oo, tt});
  } else {
    outers.push_back({});
  }
  const std::vector<double> s_axis =
      scm_family ? spec.s : std::vector<double>{0.0};

  for (const auto& outer : outers) {
    for (double ss : s_axis) {
      GridPoint p;
      p.measure = spec.measure;
      p.o = outer.o;
      p.t = outer.t;
      p.s = ss;
      p.C = outer.C;
      p.idf = outer.idf;
      p.sym = outer.sym;
      p.dom = outer.dom;

      auto pc = detail::prepare_corpus(tune, validation, emb, p);
      auto bundle = detail::make_scorer(pc, p);
      for (auto& lv : pc.train) bundle.scorer->prepare(std::span(&lv.vec, 1));
      bundle.scorer->prepare(pc.test);

      // Rank once per validation doc; every k reuses the ranking.
      std::vector<std::vector<std::size_t>> rankings(pc.test.size());
      std::vector<std::unique_ptr<DocScorer>> clones;
      const auto workers = static_cast<std::size_t>(std::max(threads, 1));
      for (std::size_t w = 0; w < workers; ++w) clones.push_back(bundle.scorer->clone());
      parallel_for(pc.test.size(), threads, [&](std::size_t i, std::size_t w) {
        rankings[i] = rank_neighbors(pc.train, pc.test[i], *clones[w]);
      });

      for (int kk : spec.k) {
        const int k_eff = std::min<int>(kk, static_cast<int>(pc.train.size()));
        long long errors = 0;
        for (std::size_t i = 0; i < pc.test.size(); ++i) {
          if (vote(pc.train, rankings[i], k_eff) != validation[i].label) errors++;
        }
        GridPoint pk = p;
        pk.k = kk;
        const double err =
            static_cast<double>(errors) / static_cast<double>(pc.test.size());
        result.log.emplace_back(pk, err);
      }
    }
  }

  // argmin with lexicographic tie-break on the parameter tuple.
  bool first = true;
  for (const auto& [point, err] : result.log) {
    if (first || err < result.best_error ||
        (err == result.best_error && point.key() < result.best.key())) {
      result.best = point;
      result.best_error = err;
      first = false;
    }
  }
  return result;
}

}  // namespace softsim
