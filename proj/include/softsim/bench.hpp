#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/hash.hpp"
#include "softsim/measures.hpp"
#include "softsim/rng.hpp"
#include "softsim/simmatrix.hpp"

namespace softsim {

struct BenchResult {
  std::string measure;
  double docs_per_sec_mean = 0.0;
  double docs_per_sec_median = 0.0;
  int repetitions = 0;
  std::size_t vocab_size = 0;
  double mean_unique_words = 0.0;  // E[p] of the benchmark corpus
  double wall_seconds_total = 0.0;
  std::size_t train_docs = 0;
  std::size_t test_docs = 0;
  double score_fold = 0.0;  // sum of all scores; also keeps the loop honest
};

namespace detail {
inline std::uint64_t corpus_checksum(std::span<const DocVector> docs) {
  std::uint64_t h = kFnvOffset;
  for (const auto& d : docs) {
    for (const auto& [id, w] : d.entries) {
      h = fnv1a64_mix(static_cast<std::uint64_t>(id), h);
      h = fnv1a64_mix(w, h);
    }
    h = fnv1a64_mix(std::uint64_t{0xabcd}, h);
  }
  return h;
}
}  // namespace detail

/// Time the scoring of every test doc against every train doc on a single
/// execution thread. Vectors must be pre-built: only scoring is measured.
/// Throughput is test docs processed per second. Checksums before and after
/// verify that scoring mutated neither the corpus nor the matrix.
inline BenchResult benchmark(const DocScorer& scorer,
                             std::span<const DocVector> train,
                             std::span<const DocVector> test, int repetitions,
                             std::size_t vocab_size,
                             const SparseSimMatrix* matrix = nullptr) {
  if (repetitions < 3) throw ValueError("benchmark needs at least 3 repetitions");
  if (train.size() + test.size() < 10) {
    throw ValueError("benchmark corpus too small (< 10 docs)");
  }
  scorer.prepare(train);
  scorer.prepare(test);

  const std::uint64_t before_train = detail::corpus_checksum(train);
  const std::uint64_t before_test = detail::corpus_checksum(test);
  const std::uint64_t before_matrix = matrix ? matrix->content_hash() : 0;

  BenchResult res;
  res.measure = scorer.name();
  res.repetitions = repetitions;
  res.vocab_size = vocab_size;
  res.train_docs = train.size();
  res.test_docs = test.size();
  {
    std::size_t uniq = 0;
    for (const auto& d : train) uniq += d.entries.size();
    for (const auto& d : test) uniq += d.entries.size();
    res.mean_unique_words =
        static_cast<double>(uniq) / static_cast<double>(train.size() + test.size());
  }

  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(repetitions));
  double fold = 0.0;
  const auto wall0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& b : test) {
      for (const auto& a : train) {
        fold += scorer.score(a, b);
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    rates.push_back(static_cast<double>(test.size()) / std::max(secs, 1e-12));
  }
  const auto wall1 = std::chrono::steady_clock::now();
  res.wall_seconds_total = std::chrono::duration<double>(wall1 - wall0).count();
  res.score_fold = fold;

  if (detail::corpus_checksum(train) != before_train ||
      detail::corpus_checksum(test) != before_test ||
      (matrix && matrix->content_hash() != before_matrix)) {
    throw NumericalError("benchmark mutated its inputs");
  }

  double sum = 0.0;
  for (double r : rates) sum += r;
  res.docs_per_sec_mean = sum / static_cast<double>(rates.size());
  std::sort(rates.begin(), rates.end());
  res.docs_per_sec_median = rates[rates.size() / 2];
  return res;
}

// --- cosine similarity histogram ----------------------------------------------

struct CosineHistogram {
  std::vector<long long> counts;
  long long pairs = 0;
  double mean = 0.0;

  double bin_left(std::size_t i) const {
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(counts.size());
  }
  double bin_right(std::size_t i) const {
    return -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(counts.size());
  }
};

/// Histogram of <e_i, e_j> over seeded random word pairs i != j, binned over
/// [-1, 1]. Requires row-normalized embeddings.
inline CosineHistogram cosine_histogram(const DenseEmbeddings& e, long long pairs,
                                        int bins, std::uint64_t seed) {
  if (e.size() < 2) throw ValueError("cosine_histogram needs at least 2 words");
  if (pairs < 1) throw ValueError("cosine_histogram needs pairs >= 1");
  if (bins < 1) throw ValueError("cosine_histogram needs bins >= 1");
  if (!e.normalized()) {
    throw ValueError("cosine_histogram requires row-normalized embeddings");
  }
  CosineHistogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  h.pairs = pairs;
  Rng rng(seed);
  double sum = 0.0;
  for (long long p = 0; p < pairs; ++p) {
    const std::size_t i = rng.index(e.size());
    std::size_t j = rng.index(e.size() - 1);
    if (j >= i) j++;
    double c = dot(e.row(i), e.row(j));
    c = std::clamp(c, -1.0, 1.0);
    auto bin = static_cast<std::size_t>((c + 1.0) / 2.0 * static_cast<double>(bins));
    bin = std::min(bin, static_cast<std::size_t>(bins - 1));
    h.counts[bin]++;
    sum += c;
  }
  h.mean = sum / static_cast<double>(pairs);
  return h;
}

}  // namespace softsim
