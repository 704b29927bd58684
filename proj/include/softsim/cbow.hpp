#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "softsim/dense_matrix.hpp"
#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/rng.hpp"

namespace softsim {

struct TrainConfig {
  std::size_t dim = 100;
  int window = 5;          // w: context positions on each side
  int negatives = 5;       // k: negative samples per example
  int epochs = 5;
  double lr_start = 0.025;
  double lr_end = 1e-4;
  std::uint64_t seed = 1;
  bool quantize_aware = false;
  long min_count = 1;
  double unigram_exponent = 0.75;

  void validate() const {
    if (dim < 1) throw ValueError("dim must be >= 1");
    if (window < 1) throw ValueError("window must be >= 1");
    if (negatives < 1) throw ValueError("negatives must be >= 1");
    if (epochs < 1) throw ValueError("epochs must be >= 1");
    if (lr_start < 0.0 || lr_end < 0.0) throw ValueError("learning rates must be >= 0");
  }
};

struct TrainState {
  DenseMatrix center;    // u vectors, one row per word
  DenseMatrix context;   // v vectors, one row per word
  std::vector<double> epoch_loss;  // mean example loss per epoch
};

inline double logistic(double z) {
  // Stable in both tails.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow; equals -log(logistic(-z)).
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// Negative-sampling loss for one example:
/// -log sigmoid(<center, context_mean>) - sum_i log sigmoid(-<neg_i, context_mean>).
inline double cbow_loss(std::span<const double> center,
                        std::span<const double> context_mean,
                        const std::vector<std::span<const double>>& negatives) {
  if (center.size() != context_mean.size()) {
    throw ValueError("cbow_loss: dimension mismatch");
  }
  double loss = softplus(-dot(center, context_mean));
  for (const auto& neg : negatives) {
    if (neg.size() != context_mean.size()) {
      throw ValueError("cbow_loss: dimension mismatch");
    }
    loss += softplus(dot(neg, context_mean));
  }
  return loss;
}

/// Mean of the available context vectors with the fixed divisor 2w, also when
/// the window is clipped at a sentence boundary.
inline std::vector<double> context_mean(
    const std::vector<std::span<const double>>& context, int window) {
  if (context.empty()) {
    throw ValueError("context_mean: empty context, skip the example");
  }
  std::vector<double> mean(context.front().size(), 0.0);
  for (const auto& v : context) {
    if (v.size() != mean.size()) throw ValueError("context_mean: dimension mismatch");
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
  }
  const double inv = 1.0 / (2.0 * static_cast<double>(window));
  for (double& m : mean) m *= inv;
  return mean;
}

/// Forward half of the straight-through estimator: the two-valued quantizer.
inline std::vector<double> quantized_forward(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = quantize_value(v[i]);
  return out;
}

/// Backward half: the quantizer's gradient is taken to be the identity, so the
/// upstream gradient passes through unchanged.
inline std::vector<double> ste_backward(std::vector<double> upstream) {
  return upstream;
}

/// One SGD update for a single (center, context, negatives) example; returns
/// the example loss. With quantize_aware the quantizer is applied to every
/// word vector in the forward pass while gradients flow to the raw parameters
/// (straight-through estimator).
inline double cbow_train_step(DenseMatrix& center_vecs, DenseMatrix& context_vecs,
                              std::size_t center,
                              std::span<const std::size_t> context_ids,
                              std::span<const std::size_t> negative_ids,
                              int window, double lr, bool quantize_aware) {
  const std::size_t dim = center_vecs.cols;
  if (context_ids.empty()) throw ValueError("cbow_train_step: empty context");

  // Forward: v_hat from (possibly quantized) context vectors.
  std::vector<double> v_hat(dim, 0.0);
  for (std::size_t c : context_ids) {
    auto row = context_vecs.row(c);
    for (std::size_t d = 0; d < dim; ++d) {
      v_hat[d] += quantize_aware ? quantize_value(row[d]) : row[d];
    }
  }
  const double inv = 1.0 / (2.0 * static_cast<double>(window));
  for (double& m : v_hat) m *= inv;

  auto forward_row = [&](std::size_t w) {
    std::vector<double> out(dim);
    auto row = center_vecs.row(w);
    for (std::size_t d = 0; d < dim; ++d) {
      out[d] = quantize_aware ? quantize_value(row[d]) : row[d];
    }
    return out;
  };

  const std::vector<double> u_center = forward_row(center);
  const double z_pos = dot(u_center, v_hat);
  double loss = softplus(-z_pos);

  // d loss / d z for the positive term; negatives appended below.
  std::vector<double> v_hat_grad(dim, 0.0);
  const double g_pos = logistic(z_pos) - 1.0;
  for (std::size_t d = 0; d < dim; ++d) v_hat_grad[d] += g_pos * u_center[d];
  {
    auto row = center_vecs.row(center);
    for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * g_pos * v_hat[d];
  }
  for (std::size_t nid : negative_ids) {
    if (nid == center) continue;  // sampled the positive word, no gradient
    const std::vector<double> u_neg = forward_row(nid);
    const double z_neg = dot(u_neg, v_hat);
    loss += softplus(z_neg);
    const double g_neg = logistic(z_neg);
    for (std::size_t d = 0; d < dim; ++d) v_hat_grad[d] += g_neg * u_neg[d];
    auto row = center_vecs.row(nid);
    for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * g_neg * v_hat[d];
  }

  // Context updates: v_hat distributes the gradient with the 1/(2w) factor,
  // and the STE passes it through the quantizer unchanged.
  for (std::size_t c : context_ids) {
    auto row = context_vecs.row(c);
    for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * inv * v_hat_grad[d];
  }
  return loss;
}

/// Samples word ids from the unigram distribution raised to a power.
class UnigramSampler {
 public:
  UnigramSampler(std::span<const long long> counts, double exponent) {
    cdf_.reserve(counts.size());
    double total = 0.0;
    for (long long c : counts) {
      total += std::pow(static_cast<double>(c), exponent);
      cdf_.push_back(total);
    }
    if (total <= 0.0) throw ValueError("unigram sampler needs positive counts");
    for (double& v : cdf_) v /= total;
    cdf_.back() = 1.0;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                 static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  }

 private:
  std::vector<double> cdf_;
};

struct CbowResult {
  DenseEmbeddings embeddings;  // center + context vectors, summed row-wise
  std::vector<double> epoch_loss;
};

/// Deterministic single-threaded CBOW training over tokenized sentences.
/// The exported embedding of a word is the sum of its center and context
/// vectors; with quantize_aware the sum is quantized on export.
inline CbowResult train_cbow(const std::vector<std::vector<std::string>>& sentences,
                             const TrainConfig& cfg) {
  cfg.validate();

  // Training vocabulary: min_count filter, then sorted by
  // (count desc, word asc) so ids are reproducible.
  std::unordered_map<std::string, long long> counts;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent) counts[tok]++;
  }
  std::vector<std::pair<std::string, long long>> vocab;
  for (const auto& [w, c] : counts) {
    if (c >= cfg.min_count) vocab.emplace_back(w, c);
  }
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (vocab.empty()) throw ValueError("corpus is empty after min_count filtering");

  std::vector<std::string> words(vocab.size());
  std::vector<long long> word_counts(vocab.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    words[i] = vocab[i].first;
    word_counts[i] = vocab[i].second;
    index[words[i]] = i;
  }

  // Sentences as id sequences, dropping filtered words.
  std::vector<std::vector<std::size_t>> ids;
  ids.reserve(sentences.size());
  long long total_positions = 0;
  for (const auto& sent : sentences) {
    std::vector<std::size_t> s;
    s.reserve(sent.size());
    for (const auto& tok : sent) {
      auto it = index.find(tok);
      if (it != index.end()) s.push_back(it->second);
    }
    total_positions += static_cast<long long>(s.size());
    if (!s.empty()) ids.push_back(std::move(s));
  }
  if (total_positions == 0) throw ValueError("corpus is empty after min_count filtering");

  Rng rng(cfg.seed);
  DenseMatrix center_vecs(words.size(), cfg.dim);
  DenseMatrix context_vecs(words.size(), cfg.dim);
  // word2vec-style init: uniform center vectors, zero context vectors.
  for (double& v : center_vecs.data) {
    v = (rng.uniform() - 0.5) / static_cast<double>(cfg.dim);
  }

  UnigramSampler sampler(word_counts, cfg.unigram_exponent);
  const double total_steps =
      static_cast<double>(cfg.epochs) * static_cast<double>(total_positions);

  std::vector<double> epoch_loss;
  std::vector<std::size_t> context_ids;
  std::vector<std::size_t> negative_ids;
  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    long long loss_n = 0;
    for (const auto& sent : ids) {
      const auto len = static_cast<std::ptrdiff_t>(sent.size());
      for (std::ptrdiff_t pos = 0; pos < len; ++pos, ++step) {
        context_ids.clear();
        for (std::ptrdiff_t off = -cfg.window; off <= cfg.window; ++off) {
          const std::ptrdiff_t p = pos + off;
          if (off == 0 || p < 0 || p >= len) continue;
          context_ids.push_back(sent[static_cast<std::size_t>(p)]);
        }
        if (context_ids.empty()) continue;  // single-word sentence
        negative_ids.clear();
        for (int j = 0; j < cfg.negatives; ++j) negative_ids.push_back(sampler.sample(rng));
        const double progress = static_cast<double>(step) / total_steps;
        const double lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * progress;
        loss_sum += cbow_train_step(center_vecs, context_vecs,
                                    sent[static_cast<std::size_t>(pos)],
                                    context_ids, negative_ids, cfg.window, lr,
                                    cfg.quantize_aware);
        loss_n++;
      }
    }
    epoch_loss.push_back(loss_n > 0 ? loss_sum / static_cast<double>(loss_n) : 0.0);
  }

  DenseEmbeddings out(words, cfg.dim);
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto u = center_vecs.row(i);
    auto v = context_vecs.row(i);
    auto dst = out.row(i);
    for (std::size_t d = 0; d < cfg.dim; ++d) dst[d] = u[d] + v[d];
  }
  if (cfg.quantize_aware) out = quantize(std::move(out));
  return CbowResult{std::move(out), std::move(epoch_loss)};
}

}  // namespace softsim
