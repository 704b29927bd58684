#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/rng.hpp"

namespace softsim {

/// Random unit row vectors (Gaussian directions).
inline DenseEmbeddings make_random_unit_embeddings(std::vector<std::string> words,
                                                   std::size_t dim, Rng& rng) {
  DenseEmbeddings e(std::move(words), dim);
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (double& v : e.row(i)) v = rng.normal();
  }
  return normalize_rows(std::move(e));
}

// --- seeded Zipfian benchmark corpus --------------------------------------------

struct ZipfCorpusConfig {
  std::size_t vocab = 5000;
  std::size_t unique_per_doc = 100;  // E[p]: unique words per document
  std::size_t train_docs = 50;
  std::size_t test_docs = 50;
  std::size_t dim = 64;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 42;
};

struct SyntheticCorpus {
  std::vector<Document> train;
  std::vector<Document> test;
  DenseEmbeddings embeddings;  // unit rows, one per vocabulary word
};

/// Benchmark corpus: documents drawn from a Zipfian vocabulary until each
/// reaches the target unique-word count, plus random unit embeddings. Shape
/// is machine-comparable even when absolute speeds are not.
inline SyntheticCorpus make_zipf_corpus(const ZipfCorpusConfig& cfg) {
  if (cfg.vocab < 2 || cfg.unique_per_doc < 1) {
    throw ValueError("zipf corpus needs vocab >= 2 and unique_per_doc >= 1");
  }
  if (cfg.unique_per_doc > cfg.vocab) {
    throw ValueError("unique_per_doc cannot exceed the vocabulary size");
  }
  Rng rng(cfg.seed);

  std::vector<std::string> words(cfg.vocab);
  for (std::size_t i = 0; i < cfg.vocab; ++i) words[i] = "w" + std::to_string(i);

  std::vector<double> cdf(cfg.vocab);
  double total = 0.0;
  for (std::size_t r = 0; r < cfg.vocab; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), cfg.zipf_exponent);
    cdf[r] = total;
  }
  for (double& v : cdf) v /= total;
  auto draw = [&]() -> std::size_t {
    const double u = rng.uniform();
    std::size_t lo = 0, hi = cfg.vocab - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf[mid] < u) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo;
  };

  auto make_doc = [&](const std::string& id) {
    Document d;
    d.id = id;
    std::vector<char> seen(cfg.vocab, 0);
    std::size_t uniq = 0;
    const std::size_t cap = 200 * cfg.unique_per_doc + 1000;
    while (uniq < cfg.unique_per_doc && d.tokens.size() < cap) {
      const std::size_t w = draw();
      if (!seen[w]) {
        seen[w] = 1;
        uniq++;
      }
      d.tokens.push_back(words[w]);
    }
    return d;
  };

  SyntheticCorpus out;
  for (std::size_t i = 0; i < cfg.train_docs; ++i) {
    out.train.push_back(make_doc("train-" + std::to_string(i)));
  }
  for (std::size_t i = 0; i < cfg.test_docs; ++i) {
    out.test.push_back(make_doc("test-" + std::to_string(i)));
  }
  out.embeddings = make_random_unit_embeddings(words, cfg.dim, rng);
  return out;
}

// --- seeded multi-class corpus with synonym substitution -------------------------

struct SynonymDatasetConfig {
  int classes = 4;
  int concepts_per_class = 10;
  int synonyms_per_concept = 8;
  int shared_concepts = 8;
  double shared_fraction = 0.3;  // tokens drawn from class-neutral concepts
  int doc_len = 40;
  int train_docs = 300;
  int test_docs = 100;
  std::size_t dim = 32;
  double synonym_noise = 0.35;  // perturbation around the concept anchor
  std::uint64_t seed = 7;
};

struct SyntheticLabeled {
  LabeledDataset dataset;
  DenseEmbeddings embeddings;
};

/// Multi-class corpus where every concept surfaces as one of several synonym
/// words whose embeddings cluster around a shared anchor. Each document picks
/// one synonym per concept, so surface overlap between same-class documents
/// is low while embedding similarity stays high.
inline SyntheticLabeled make_synonym_dataset(const SynonymDatasetConfig& cfg) {
  Rng rng(cfg.seed);
  const int total_concepts = cfg.classes * cfg.concepts_per_class + cfg.shared_concepts;

  // Anchor direction per concept, synonyms perturbed around it.
  std::vector<std::string> words;
  std::vector<std::vector<std::string>> concept_words(
      static_cast<std::size_t>(total_concepts));
  for (int c = 0; c < total_concepts; ++c) {
    for (int s = 0; s < cfg.synonyms_per_concept; ++s) {
      concept_words[static_cast<std::size_t>(c)].push_back(
          "c" + std::to_string(c) + "w" + std::to_string(s));
      words.push_back(concept_words[static_cast<std::size_t>(c)].back());
    }
  }
  DenseEmbeddings emb(words, cfg.dim);
  {
    std::vector<double> anchor(cfg.dim);
    std::size_t row = 0;
    for (int c = 0; c < total_concepts; ++c) {
      double sq = 0.0;
      for (auto& v : anchor) {
        v = rng.normal();
        sq += v * v;
      }
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& v : anchor) v *= inv;
      for (int s = 0; s < cfg.synonyms_per_concept; ++s, ++row) {
        auto dst = emb.row(row);
        for (std::size_t d = 0; d < cfg.dim; ++d) {
          dst[d] = anchor[d] + cfg.synonym_noise * rng.normal();
        }
      }
    }
  }
  emb = normalize_rows(std::move(emb));

  auto make_doc = [&](int label, const std::string& id) {
    Document d;
    d.label = "class" + std::to_string(label);
    d.id = id;
    // Per-document synonym choice: one surface form per concept.
    std::vector<int> dialect(static_cast<std::size_t>(total_concepts));
    for (auto& s : dialect) s = static_cast<int>(rng.index(
        static_cast<std::size_t>(cfg.synonyms_per_concept)));
    const int class_base = label * cfg.concepts_per_class;
    const int shared_base = cfg.classes * cfg.concepts_per_class;
    for (int tkn = 0; tkn < cfg.doc_len; ++tkn) {
      int topic;
      if (cfg.shared_concepts > 0 && rng.uniform() < cfg.shared_fraction) {
        topic = shared_base + static_cast<int>(rng.index(
            static_cast<std::size_t>(cfg.shared_concepts)));
      } else {
        topic = class_base + static_cast<int>(rng.index(
            static_cast<std::size_t>(cfg.concepts_per_class)));
      }
      d.tokens.push_back(concept_words[static_cast<std::size_t>(topic)]
                             [static_cast<std::size_t>(
                                 dialect[static_cast<std::size_t>(topic)])]);
    }
    return d;
  };

  SyntheticLabeled out;
  for (int i = 0; i < cfg.train_docs; ++i) {
    out.dataset.train.push_back(
        make_doc(i % cfg.classes, "train-" + std::to_string(i)));
  }
  for (int i = 0; i < cfg.test_docs; ++i) {
    out.dataset.test.push_back(
        make_doc(i % cfg.classes, "test-" + std::to_string(i)));
  }
  for (int c = 0; c < cfg.classes; ++c) {
    out.dataset.classes.push_back("class" + std::to_string(c));
  }
  out.embeddings = std::move(emb);
  return out;
}

}  // namespace softsim
