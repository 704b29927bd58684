#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "softsim/error.hpp"

namespace softsim {

/// Word embedding matrix: one row of `dim` doubles per word.
class DenseEmbeddings {
 public:
  DenseEmbeddings() = default;

  DenseEmbeddings(std::vector<std::string> words, std::size_t dim)
      : words_(std::move(words)), dim_(dim), data_(words_.size() * dim, 0.0) {
    rebuild_index();
  }

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }
  void set_normalized(bool v) { normalized_ = v; }

  const std::string& word(std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const { return words_; }

  /// Row index of `word`, or -1 when absent.
  long find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
  }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  static DenseEmbeddings load_word2vec_text(const std::string& path);
  void save_word2vec_text(const std::string& path) const;

 private:
  void rebuild_index() {
    index_.clear();
    index_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
  }

  std::vector<std::string> words_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  bool normalized_ = false;
};

/// The two-valued quantizer. sign(0) maps to +1/3.
inline double quantize_value(double x) { return x < 0.0 ? -1.0 / 3.0 : 1.0 / 3.0; }

/// Every entry replaced by quantize_value. Idempotent.
inline DenseEmbeddings quantize(DenseEmbeddings e) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (double& v : e.row(i)) v = quantize_value(v);
  }
  e.set_normalized(false);
  return e;
}

/// Rescale every row to unit l2 norm. A zero row is an error naming the word.
inline DenseEmbeddings normalize_rows(DenseEmbeddings e) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    double sq = 0.0;
    for (double v : e.row(i)) sq += v * v;
    if (sq == 0.0) {
      throw ValueError("cannot normalize zero embedding row for word '" +
                       e.word(i) + "'");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : e.row(i)) v *= inv;
  }
  e.set_normalized(true);
  return e;
}

// --- word2vec text format -------------------------------------------------
//
// First line: "<count> <dim>". Each following line: "<word> <v1> ... <vdim>".
// Values are written with 17 significant digits so a save/load round trip is
// bit-exact for doubles.

inline DenseEmbeddings DenseEmbeddings::load_word2vec_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  std::istringstream header(line);
  long long count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) {
    throw IoError(path + ":1: malformed header, expected '<count> <dim>'");
  }

  DenseEmbeddings e;
  e.dim_ = static_cast<std::size_t>(dim);
  e.words_.reserve(static_cast<std::size_t>(count));
  e.data_.reserve(static_cast<std::size_t>(count * dim));

  long long rows_read = 0;
  std::size_t lineno = 1;
  std::vector<double> row(static_cast<std::size_t>(dim));
  while (rows_read < count) {
    if (!std::getline(in, line)) {
      throw IoError(path + ": truncated file, header declared " +
                    std::to_string(count) + " rows but found " +
                    std::to_string(rows_read));
    }
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) {
      throw IoError(path + ":" + std::to_string(lineno) + ": missing word");
    }
    for (long long d = 0; d < dim; ++d) {
      if (!(ls >> row[static_cast<std::size_t>(d)])) {
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": expected " + std::to_string(dim) +
                      " numeric components for word '" + word + "'");
      }
    }
    double trailing;
    if (ls >> trailing) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": row has more than " + std::to_string(dim) +
                    " components");
    }
    ++rows_read;
    if (e.index_.count(word)) {
      std::cerr << "warning: " << path << ":" << lineno << ": duplicate word '"
                << word << "', keeping first occurrence\n";
      continue;
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": non-finite component for word '" + word + "'");
      }
    }
    e.index_[word] = e.words_.size();
    e.words_.push_back(word);
    e.data_.insert(e.data_.end(), row.begin(), row.end());
  }
  return e;
}

inline void DenseEmbeddings::save_word2vec_text(const std::string& path) const {
  for (const auto& w : words_) {
    if (w.find(' ') != std::string::npos || w.find('\n') != std::string::npos) {
      throw ValueError("word '" + w +
                       "' contains whitespace and cannot be stored in "
                       "word2vec text format");
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << words_.size() << ' ' << dim_ << '\n';
  char buf[64];
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << words_[i];
    for (double v : row(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace softsim
