#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "softsim/embeddings.hpp"
#include "softsim/error.hpp"
#include "softsim/hash.hpp"
#include "softsim/rng.hpp"

namespace softsim {

// --- tokenization -----------------------------------------------------------

namespace detail {
// Word characters are ASCII alphanumerics plus any non-ASCII byte (so UTF-8
// letters stay inside one token). Only ASCII letters satisfy the "at least
// one alphabetic character" rule's ASCII part; non-ASCII bytes count as
// alphabetic as well.
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}
inline bool is_alpha_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}
inline char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}
}  // namespace detail

/// Lowercase the text and split it into maximal alphanumeric runs, keeping
/// only runs that contain at least one alphabetic character. Purely numeric
/// runs are dropped; order is preserved.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  bool has_alpha = false;
  auto flush = [&] {
    if (!cur.empty() && has_alpha) out.push_back(cur);
    cur.clear();
    has_alpha = false;
  };
  for (unsigned char c : text) {
    if (detail::is_word_byte(c)) {
      cur.push_back(detail::lower_ascii(c));
      has_alpha = has_alpha || detail::is_alpha_byte(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// --- documents and datasets --------------------------------------------------

struct Document {
  std::vector<std::string> tokens;
  std::string label;  // empty for unlabeled queries
  std::string id;
};

struct LabeledDataset {
  std::vector<Document> train;
  std::vector<Document> test;
  std::vector<std::string> classes;  // sorted, unique
};

// --- vocabulary ---------------------------------------------------------------

/// Word <-> dense id map with per-document frequencies. Ids are assigned in
/// first-occurrence order over the corpus.
class Vocabulary {
 public:
  std::size_t size() const { return words_.size(); }
  long n_docs() const { return n_docs_; }

  const std::string& word(std::size_t id) const { return words_[id]; }
  const std::vector<std::string>& words() const { return words_; }

  /// Dense id of `word`, or -1 when the word is not in the vocabulary.
  long id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : it->second;
  }

  long doc_freq(std::size_t id) const {
    if (id >= doc_freq_.size()) throw ValueError("unknown word id");
    return doc_freq_[id];
  }

  /// Stable content hash (word list + frequencies), used to tie serialized
  /// matrices back to the vocabulary they index.
  std::uint64_t content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      h = fnv1a64(words_[i], h);
      h = fnv1a64("\xff", h);
      h = fnv1a64_mix(static_cast<std::uint64_t>(doc_freq_[i]), h);
    }
    return fnv1a64_mix(static_cast<std::uint64_t>(n_docs_), h);
  }

  template <class DocRange>
  static Vocabulary build(const DocRange& docs, const DenseEmbeddings* filter) {
    Vocabulary voc;
    for (const Document& d : docs) {
      voc.n_docs_++;
      std::unordered_set<std::string> seen;
      for (const std::string& tok : d.tokens) {
        if (filter && !filter->contains(tok)) continue;
        if (!seen.insert(tok).second) continue;
        auto it = voc.index_.find(tok);
        if (it == voc.index_.end()) {
          voc.index_.emplace(tok, static_cast<long>(voc.words_.size()));
          voc.words_.push_back(tok);
          voc.doc_freq_.push_back(1);
        } else {
          voc.doc_freq_[static_cast<std::size_t>(it->second)]++;
        }
      }
    }
    return voc;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, long> index_;
  std::vector<long> doc_freq_;
  long n_docs_ = 0;
};

/// Vocabulary of the tokens that occur in `docs` and have an embedding row.
/// Errors when corpus and embeddings do not overlap at all.
template <class DocRange>
Vocabulary build_vocabulary(const DocRange& docs, const DenseEmbeddings& embeddings) {
  Vocabulary voc = Vocabulary::build(docs, &embeddings);
  if (voc.size() == 0) {
    throw ValueError(
        "no overlap between corpus tokens and embedding vocabulary");
  }
  return voc;
}

/// Unfiltered vocabulary (bag-of-words baseline needs no embeddings).
template <class DocRange>
Vocabulary build_vocabulary(const DocRange& docs) {
  return Vocabulary::build(docs, nullptr);
}

/// Inverse document frequency, log2(n_docs / doc_freq).
inline double idf(const Vocabulary& voc, std::size_t word_id) {
  const long df = voc.doc_freq(word_id);  // throws on unknown id
  return std::log2(static_cast<double>(voc.n_docs()) / static_cast<double>(df));
}

/// Embedding matrix whose row i is the vector of vocabulary word i.
inline DenseEmbeddings align_embeddings(const DenseEmbeddings& e,
                                        const Vocabulary& voc) {
  DenseEmbeddings out(voc.words(), e.dim());
  for (std::size_t i = 0; i < voc.size(); ++i) {
    const long r = e.find(voc.word(i));
    if (r < 0) {
      throw ValueError("vocabulary word '" + voc.word(i) +
                       "' has no embedding row");
    }
    auto src = e.row(static_cast<std::size_t>(r));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  out.set_normalized(e.normalized());
  return out;
}

// --- document vectors ----------------------------------------------------------

/// Sparse term-weight vector over vocabulary ids. Entries are sorted by id
/// and never store zero weights. `norm_cache` is filled by whichever scorer
/// prepared the vector (the cached value is measure-specific).
struct DocVector {
  std::vector<std::pair<long, double>> entries;
  mutable std::optional<double> norm_cache;

  bool empty() const { return entries.empty(); }

  double l2_norm() const {
    double sq = 0.0;
    for (const auto& [id, w] : entries) sq += w * w;
    return std::sqrt(sq);
  }
};

namespace detail {
inline std::map<long, long> term_counts(const Document& doc, const Vocabulary& voc) {
  std::map<long, long> counts;
  for (const std::string& tok : doc.tokens) {
    const long id = voc.id(tok);
    if (id >= 0) counts[id]++;
  }
  return counts;
}
}  // namespace detail

/// Raw term frequency weights; out-of-vocabulary tokens are skipped.
inline DocVector bow_vector(const Document& doc, const Vocabulary& voc) {
  DocVector v;
  for (const auto& [id, tf] : detail::term_counts(doc, voc)) {
    v.entries.emplace_back(id, static_cast<double>(tf));
  }
  return v;
}

/// SMART dtb weights: double-log term frequency, (N+1)/df collection factor,
/// pivoted length normalization with slope s. Length is measured in retained
/// tokens; avg_len is the training collection's mean retained length.
inline DocVector dtb_vector(const Document& doc, const Vocabulary& voc,
                            double avg_len, double slope) {
  if (avg_len <= 0.0) throw ValueError("dtb weighting requires avg_len > 0");
  if (slope < 0.0 || slope > 1.0) throw ValueError("dtb slope must be in [0, 1]");
  const auto counts = detail::term_counts(doc, voc);
  long len = 0;
  for (const auto& [id, tf] : counts) len += tf;
  const double pivot =
      (1.0 - slope) + slope * static_cast<double>(len) / avg_len;
  const double n_docs = static_cast<double>(voc.n_docs());
  DocVector v;
  for (const auto& [id, tf] : counts) {
    const double d = 1.0 + std::log(1.0 + std::log(static_cast<double>(tf)));
    const double t =
        std::log((n_docs + 1.0) / static_cast<double>(voc.doc_freq(id)));
    v.entries.emplace_back(id, d * t / pivot);
  }
  return v;
}

/// Mean retained-token count over `docs`, the avg_len input of dtb_vector.
template <class DocRange>
double mean_retained_length(const DocRange& docs, const Vocabulary& voc) {
  long long total = 0;
  long long n = 0;
  for (const Document& d : docs) {
    for (const std::string& tok : d.tokens) {
      if (voc.id(tok) >= 0) total++;
    }
    n++;
  }
  return n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
}

// --- ingestion -------------------------------------------------------------------

enum class DatasetFormat { Auto, ClassDirs, Jsonl };

struct IngestOptions {
  DatasetFormat format = DatasetFormat::Auto;
  double train_fraction = 0.7;  // used only when no standard split exists
  std::uint64_t seed = 0;
};

namespace detail {

inline Document make_document(std::string text, std::string label, std::string id) {
  Document d;
  d.tokens = tokenize(text);
  d.label = std::move(label);
  d.id = std::move(id);
  return d;
}

inline std::vector<Document> read_class_dirs(const std::filesystem::path& root,
                                             const std::string& id_prefix) {
  namespace fs = std::filesystem;
  std::vector<Document> docs;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& cdir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cdir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw IoError("cannot read document file: " + f.string());
      std::ostringstream text;
      text << in.rdbuf();
      docs.push_back(make_document(text.str(), cdir.filename().string(),
                                   id_prefix + cdir.filename().string() + "/" +
                                       f.filename().string()));
    }
  }
  return docs;
}

inline std::vector<Document> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset file: " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": invalid JSON: " + ex.what());
    }
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": missing string field \"label\"");
    }
    if (!j.contains("text") || !j["text"].is_string()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": missing string field \"text\"");
    }
    std::string id = j.contains("id") && j["id"].is_string()
                         ? j["id"].get<std::string>()
                         : "jsonl:" + std::to_string(lineno);
    docs.push_back(make_document(j["text"].get<std::string>(),
                                 j["label"].get<std::string>(), std::move(id)));
  }
  return docs;
}

inline std::vector<std::string> collect_classes(const LabeledDataset& ds) {
  std::set<std::string> classes;
  for (const auto& d : ds.train) classes.insert(d.label);
  for (const auto& d : ds.test) classes.insert(d.label);
  return {classes.begin(), classes.end()};
}

}  // namespace detail

/// Deterministic seeded partition of `docs` into (rest, held_out) where
/// |held_out| = round(fraction * |docs|). Original document order is kept
/// inside both parts.
inline std::pair<std::vector<Document>, std::vector<Document>> split_holdout(
    const std::vector<Document>& docs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValueError("holdout fraction must be in (0, 1)");
  }
  const std::size_t n = docs.size();
  const auto n_held = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<bool> held(n, false);
  for (std::size_t i = 0; i < n_held; ++i) held[idx[i]] = true;
  std::pair<std::vector<Document>, std::vector<Document>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (held[i] ? out.second : out.first).push_back(docs[i]);
  }
  return out;
}

/// Stratified variant: the held-out part receives round(fraction * n) docs
/// overall, allocated per class by largest remainder so small classes stay
/// represented on both sides.
inline std::pair<std::vector<Document>, std::vector<Document>>
split_holdout_stratified(const std::vector<Document>& docs, double fraction,
                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValueError("holdout fraction must be in (0, 1)");
  }
  const std::size_t n = docs.size();
  const auto n_held = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[docs[i].label].push_back(i);

  // Per-class quota: floor share first, then largest fractional remainders.
  std::vector<std::pair<std::string, std::size_t>> quota;
  std::vector<std::pair<double, std::string>> remainders;
  std::size_t assigned = 0;
  for (const auto& [label, members] : by_class) {
    const double exact = fraction * static_cast<double>(members.size());
    auto q = static_cast<std::size_t>(exact);
    q = std::min(q, members.size());
    quota.emplace_back(label, q);
    assigned += q;
    remainders.emplace_back(exact - static_cast<double>(q), label);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (const auto& [rem, label] : remainders) {
    if (assigned >= n_held) break;
    for (auto& [l, q] : quota) {
      if (l == label && q < by_class[label].size()) {
        q++;
        assigned++;
        break;
      }
    }
  }

  Rng rng(seed);
  std::vector<bool> held(n, false);
  for (auto& [label, q] : quota) {
    auto& members = by_class[label];
    rng.shuffle(members);
    for (std::size_t i = 0; i < q; ++i) held[members[i]] = true;
  }
  std::pair<std::vector<Document>, std::vector<Document>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (held[i] ? out.second : out.first).push_back(docs[i]);
  }
  return out;
}

/// Read a dataset from disk. Directory layouts:
///   <root>/<class>/<docid>.txt                      seeded split
///   <root>/{train,test}/<class>/<docid>.txt         standard split
/// or a JSONL file with one {"label": ..., "text": ...} object per line.
inline LabeledDataset ingest_dataset(const std::string& path,
                                     const IngestOptions& opt = {}) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw IoError("dataset path does not exist: " + path);

  DatasetFormat format = opt.format;
  if (format == DatasetFormat::Auto) {
    format = fs::is_directory(path) ? DatasetFormat::ClassDirs : DatasetFormat::Jsonl;
  }

  LabeledDataset ds;
  if (format == DatasetFormat::Jsonl) {
    if (fs::is_directory(path)) {
      throw IoError("expected a JSONL file, got a directory: " + path);
    }
    auto docs = detail::read_jsonl(path);
    std::tie(ds.train, ds.test) =
        split_holdout(docs, 1.0 - opt.train_fraction, opt.seed);
  } else {
    if (!fs::is_directory(path)) {
      throw IoError("expected a dataset directory: " + path);
    }
    const fs::path root(path);
    if (fs::is_directory(root / "train") && fs::is_directory(root / "test")) {
      ds.train = detail::read_class_dirs(root / "train", "train/");
      ds.test = detail::read_class_dirs(root / "test", "test/");
    } else {
      auto docs = detail::read_class_dirs(root, "");
      if (docs.empty()) throw IoError("no documents found under: " + path);
      std::tie(ds.train, ds.test) =
          split_holdout(docs, 1.0 - opt.train_fraction, opt.seed);
    }
  }
  ds.classes = detail::collect_classes(ds);
  return ds;
}

}  // namespace softsim
