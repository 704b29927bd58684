#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "softsim/cholesky.hpp"
#include "softsim/error.hpp"
#include "softsim/simmatrix.hpp"

namespace softsim {

// Matrix Market coordinate files with "% softsim ..." comment lines that
// record the construction parameters and the column processing order.

namespace detail {

inline void write_order_comment(std::ofstream& out,
                                const std::vector<std::size_t>& order) {
  for (std::size_t i = 0; i < order.size(); i += 64) {
    out << "% order:";
    for (std::size_t j = i; j < std::min(order.size(), i + 64); ++j) {
      out << ' ' << order[j];
    }
    out << '\n';
  }
}

struct MtxFile {
  std::size_t rows = 0, cols = 0;
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries;  // 0-based
  std::map<std::string, std::string> meta;
  std::vector<std::size_t> order;
};

inline MtxFile read_mtx(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  {
    std::istringstream banner(line);
    std::string mm, object, fmt, field, symmetry;
    banner >> mm >> object >> fmt >> field >> symmetry;
    if (mm != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate" ||
        field != "real" || symmetry != "general") {
      throw IoError(path + ": expected a 'matrix coordinate real general' banner");
    }
  }
  MtxFile f;
  std::size_t lineno = 1;
  bool have_dims = false;
  std::size_t declared_nnz = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '%') {
      std::istringstream cs(line.substr(1));
      std::string head;
      cs >> head;
      if (head == "softsim") {
        std::string kv;
        while (cs >> kv) {
          const auto eq = kv.find('=');
          if (eq != std::string::npos) {
            f.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
          }
        }
      } else if (head == "order:") {
        std::size_t v;
        while (cs >> v) f.order.push_back(v);
      }
      continue;
    }
    std::istringstream ls(line);
    if (!have_dims) {
      if (!(ls >> f.rows >> f.cols >> declared_nnz)) {
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed size line");
      }
      have_dims = true;
      f.entries.reserve(declared_nnz);
      continue;
    }
    std::size_t r, c;
    double v;
    if (!(ls >> r >> c >> v)) {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed entry");
    }
    if (r < 1 || c < 1 || r > f.rows || c > f.cols) {
      throw IoError(path + ":" + std::to_string(lineno) + ": index out of range");
    }
    f.entries.emplace_back(r - 1, c - 1, v);
  }
  if (!have_dims) throw IoError(path + ": missing size line");
  if (f.entries.size() != declared_nnz) {
    throw IoError(path + ": declared " + std::to_string(declared_nnz) +
                  " entries but found " + std::to_string(f.entries.size()));
  }
  return f;
}

inline double meta_double(const MtxFile& f, const std::string& key, double dflt) {
  auto it = f.meta.find(key);
  return it == f.meta.end() ? dflt : std::stod(it->second);
}
inline long meta_long(const MtxFile& f, const std::string& key, long dflt) {
  auto it = f.meta.find(key);
  return it == f.meta.end() ? dflt : std::stol(it->second);
}
inline std::uint64_t meta_u64(const MtxFile& f, const std::string& key) {
  auto it = f.meta.find(key);
  return it == f.meta.end() ? 0 : std::stoull(it->second);
}

}  // namespace detail

inline void write_matrix_market(const std::string& path, const SparseSimMatrix& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << "% softsim kind=similarity o=" << s.params().exponent
      << " t=" << s.params().threshold << " C=" << s.config().budget
      << " sym=" << (s.config().sym ? 1 : 0) << " dom=" << (s.config().dom ? 1 : 0)
      << " idf=" << (s.config().idf ? 1 : 0) << " vocab_fnv=" << s.vocab_hash()
      << '\n';
  detail::write_order_comment(out, s.processing_order());
  out << s.size() << ' ' << s.size() << ' ' << s.nnz() << '\n';
  char buf[64];
  for (std::size_t j = 0; j < s.size(); ++j) {
    for (const auto& [r, v] : s.column(j)) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", r + 1, j + 1, v);
      out << buf;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline void write_matrix_market(const std::string& path, const OrthoEmbeddings& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << "% softsim kind=factor vocab_fnv=" << f.vocab_hash << '\n';
  detail::write_order_comment(out, f.processing_order);
  out << f.n << ' ' << f.n << ' ' << f.nnz() << '\n';
  char buf[64];
  for (std::size_t j = 0; j < f.n; ++j) {
    for (const auto& [r, v] : f.cols[j]) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", r + 1, j + 1, v);
      out << buf;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::string peek_matrix_kind(const std::string& path) {
  auto f = detail::read_mtx(path);
  auto it = f.meta.find("kind");
  return it == f.meta.end() ? "unknown" : it->second;
}

inline SparseSimMatrix read_sim_matrix(const std::string& path) {
  auto f = detail::read_mtx(path);
  if (f.rows != f.cols) throw IoError(path + ": similarity matrix must be square");
  auto it = f.meta.find("kind");
  if (it != f.meta.end() && it->second != "similarity") {
    throw IoError(path + ": not a similarity matrix (kind=" + it->second + ")");
  }
  SimParams params{static_cast<int>(detail::meta_long(f, "o", 1)),
                   detail::meta_double(f, "t", -1.0)};
  OrthoConfig cfg{detail::meta_long(f, "C", 100),
                  detail::meta_long(f, "sym", 1) != 0,
                  detail::meta_long(f, "dom", 1) != 0,
                  detail::meta_long(f, "idf", 0) != 0};
  auto m = SparseSimMatrix::from_triplets(f.rows, f.entries, params, cfg, f.order);
  m.set_vocab_hash(detail::meta_u64(f, "vocab_fnv"));
  return m;
}

inline OrthoEmbeddings read_factor(const std::string& path) {
  auto f = detail::read_mtx(path);
  if (f.rows != f.cols) throw IoError(path + ": factor matrix must be square");
  auto it = f.meta.find("kind");
  if (it != f.meta.end() && it->second != "factor") {
    throw IoError(path + ": not a factor matrix (kind=" + it->second + ")");
  }
  OrthoEmbeddings out;
  out.n = f.rows;
  out.cols.assign(f.rows, {});
  out.processing_order = f.order;
  out.vocab_hash = detail::meta_u64(f, "vocab_fnv");
  for (const auto& [r, c, v] : f.entries) out.cols[c].emplace_back(r, v);
  for (auto& col : out.cols) std::sort(col.begin(), col.end());
  return out;
}

}  // namespace softsim
