#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "softsim/corpus.hpp"
#include "softsim/rng.hpp"
#include "support/tempdir.hpp"

using namespace softsim;

namespace {

Document doc(std::vector<std::string> tokens, std::string label = "",
             std::string id = "") {
  Document d;
  d.tokens = std::move(tokens);
  d.label = std::move(label);
  d.id = std::move(id);
  return d;
}

DenseEmbeddings cover(std::vector<std::string> words) {
  DenseEmbeddings e(std::move(words), 2);
  for (std::size_t i = 0; i < e.size(); ++i) e.row(i)[0] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("tokenize lowercases and keeps maximal alphanumeric runs") {
  CHECK(tokenize("Obama speaks to the media in Illinois") ==
        std::vector<std::string>{"obama", "speaks", "to", "the", "media", "in",
                                 "illinois"});
  CHECK(tokenize("123 4th ABC") == std::vector<std::string>{"4th", "abc"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("42 17 99").empty());
  CHECK(tokenize("don't stop-me now!") ==
        std::vector<std::string>{"don", "t", "stop", "me", "now"});
}

TEST_CASE("tokenize is idempotent on its own output") {
  Rng rng(2024);
  const std::string alphabet = "aB3 .,!-_Z9\tq";
  for (int iter = 0; iter < 200; ++iter) {
    std::string text;
    const std::size_t len = rng.index(40);
    for (std::size_t i = 0; i < len; ++i) text += alphabet[rng.index(alphabet.size())];
    const auto once = tokenize(text);
    std::string joined;
    for (const auto& t : once) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("build_vocabulary keeps tokens with embeddings, counts per document") {
  const auto emb = cover({"a", "b", "c"});
  const std::vector<Document> docs{doc({"a", "b"}), doc({"b"})};
  const auto voc = build_vocabulary(docs, emb);
  REQUIRE(voc.size() == 2);
  CHECK(voc.n_docs() == 2);
  CHECK(voc.id("a") == 0);
  CHECK(voc.id("b") == 1);
  CHECK(voc.id("c") == -1);
  CHECK(voc.doc_freq(0) == 1);
  CHECK(voc.doc_freq(1) == 2);
}

TEST_CASE("build_vocabulary errors when corpus and embeddings do not overlap") {
  const auto emb = cover({"b"});
  const std::vector<Document> docs{doc({"a"})};
  CHECK_THROWS_AS(build_vocabulary(docs, emb), ValueError);
}

TEST_CASE("document frequency counts documents, not occurrences") {
  const auto emb = cover({"a"});
  const std::vector<Document> docs{doc({"a", "a", "a"})};
  const auto voc = build_vocabulary(docs, emb);
  CHECK(voc.doc_freq(0) == 1);
}

TEST_CASE("idf is log2(n_docs / doc_freq)") {
  std::vector<Document> docs;
  // 4 documents; "rare" in one, "common" in all.
  for (int i = 0; i < 4; ++i) {
    docs.push_back(doc({i == 0 ? "rare" : "filler", "common"}));
  }
  const auto voc = build_vocabulary(docs);
  CHECK(idf(voc, static_cast<std::size_t>(voc.id("rare"))) ==
        Catch::Approx(2.0).margin(1e-12));
  CHECK(idf(voc, static_cast<std::size_t>(voc.id("common"))) ==
        Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(voc.doc_freq(999), ValueError);

  std::vector<Document> eight;
  for (int i = 0; i < 8; ++i) eight.push_back(doc({i < 2 ? "x" : "y"}));
  const auto voc8 = build_vocabulary(eight);
  CHECK(idf(voc8, static_cast<std::size_t>(voc8.id("x"))) ==
        Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("bow_vector counts in-vocabulary terms") {
  const auto emb = cover({"a", "b"});
  const std::vector<Document> docs{doc({"a", "b"})};
  const auto voc = build_vocabulary(docs, emb);

  const auto v = bow_vector(doc({"a", "b", "a"}), voc);
  REQUIRE(v.entries.size() == 2);
  CHECK(v.entries[0] == std::pair<long, double>{0, 2.0});
  CHECK(v.entries[1] == std::pair<long, double>{1, 1.0});

  CHECK(bow_vector(doc({"c"}), voc).empty());
  CHECK(bow_vector(doc({}), voc).empty());
}

TEST_CASE("bow weights are positive integers") {
  Rng rng(7);
  const auto emb = cover({"a", "b", "c", "d"});
  const std::vector<Document> base{doc({"a", "b", "c", "d"})};
  const auto voc = build_vocabulary(base, emb);
  const std::vector<std::string> pool{"a", "b", "c", "d", "oov"};
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::string> tokens;
    const std::size_t len = rng.index(30);
    for (std::size_t i = 0; i < len; ++i) tokens.push_back(pool[rng.index(pool.size())]);
    for (const auto& [id, w] : bow_vector(doc(std::move(tokens)), voc).entries) {
      CHECK(w > 0.0);
      CHECK(w == std::floor(w));
    }
  }
}

TEST_CASE("dtb weighting matches the stated formula") {
  // df = 1 out of 3 documents, tf = 1, s = 0: the double-log factor collapses
  // to 1 and the weight is ln(4).
  const std::vector<Document> three{doc({"apple"}), doc({"pear"}), doc({"plum"})};
  const auto voc = build_vocabulary(three);
  {
    const auto v = dtb_vector(three[0], voc, 1.0, 0.0);
    REQUIRE(v.entries.size() == 1);
    CHECK(v.entries[0].second == Catch::Approx(1.3862943611198906).epsilon(1e-12));
  }
  // A word present in every one of the 3 documents: ln(4/3).
  const std::vector<Document> everywhere{doc({"apple"}), doc({"apple"}),
                                         doc({"apple"})};
  const auto voc2 = build_vocabulary(everywhere);
  {
    const auto v = dtb_vector(everywhere[0], voc2, 1.0, 0.0);
    REQUIRE(v.entries.size() == 1);
    CHECK(v.entries[0].second == Catch::Approx(0.28768207245178085).epsilon(1e-12));
  }
}

TEST_CASE("dtb frozen oracle value: tf=5, N=100, df=10, s=0.5, len=2*avg") {
  // 100 documents, 10 of which contain the target word.
  std::vector<Document> docs;
  for (int i = 0; i < 100; ++i) {
    docs.push_back(doc({i < 10 ? "target" : "other", "filler"}));
  }
  const auto voc = build_vocabulary(docs);
  REQUIRE(voc.doc_freq(static_cast<std::size_t>(voc.id("target"))) == 10);
  REQUIRE(voc.n_docs() == 100);

  std::vector<std::string> tokens(5, "target");
  for (int i = 0; i < 35; ++i) tokens.push_back("filler");  // len = 40
  const auto v = dtb_vector(doc(std::move(tokens)), voc, 20.0, 0.5);
  double target_weight = 0.0;
  for (const auto& [id, w] : v.entries) {
    if (id == voc.id("target")) target_weight = w;
  }
  // Independently computed from the formula.
  CHECK(target_weight == Catch::Approx(3.0203791433984075).epsilon(1e-12));
}

TEST_CASE("dtb with s=0 ignores document length") {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(doc({"w", "x"}));
  const auto voc = build_vocabulary(docs);
  const auto a = dtb_vector(docs[0], voc, 2.0, 0.0);
  const auto b = dtb_vector(docs[0], voc, 2000.0, 0.0);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].second == b.entries[i].second);
  }
}

TEST_CASE("dtb weight strictly increases with tf at fixed length") {
  std::vector<Document> docs;
  for (int i = 0; i < 20; ++i) docs.push_back(doc({"target", "filler"}));
  const auto voc = build_vocabulary(docs);
  double prev = 0.0;
  for (int tf = 1; tf <= 9; ++tf) {
    std::vector<std::string> tokens(static_cast<std::size_t>(tf), "target");
    while (tokens.size() < 10) tokens.push_back("filler");  // fixed len = 10
    const auto v = dtb_vector(doc(std::move(tokens)), voc, 10.0, 0.5);
    double w = 0.0;
    for (const auto& [id, weight] : v.entries) {
      if (id == voc.id("target")) w = weight;
    }
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("dtb rejects nonpositive avg_len") {
  const std::vector<Document> docs{doc({"a"})};
  const auto voc = build_vocabulary(docs);
  CHECK_THROWS_AS(dtb_vector(docs[0], voc, 0.0, 0.0), ValueError);
  CHECK_THROWS_AS(dtb_vector(docs[0], voc, -1.0, 0.0), ValueError);
}

TEST_CASE("ingest reads class-per-subdirectory trees") {
  testsupport::TempDir tmp;
  tmp.write("data/rugby/a.txt", "Scrum and lineout tactics");
  tmp.write("data/rugby/b.txt", "Try conversion kick");
  tmp.write("data/tennis/c.txt", "Baseline rally serve");
  tmp.write("data/tennis/d.txt", "Volley at the net");
  IngestOptions opt;
  opt.train_fraction = 0.5;
  opt.seed = 3;
  const auto ds = ingest_dataset(tmp.file("data"), opt);
  CHECK(ds.train.size() + ds.test.size() == 4);
  CHECK(ds.classes == std::vector<std::string>{"rugby", "tennis"});

  // Per-class counts sum to the dataset size.
  std::size_t total = 0;
  for (const auto& c : ds.classes) {
    for (const auto& d : ds.train) total += d.label == c;
    for (const auto& d : ds.test) total += d.label == c;
  }
  CHECK(total == 4);

  // Train and test are disjoint by id.
  for (const auto& a : ds.train) {
    for (const auto& b : ds.test) CHECK(a.id != b.id);
  }
}

TEST_CASE("ingest honors a standard train/test layout") {
  testsupport::TempDir tmp;
  tmp.write("data/train/spam/a.txt", "buy now");
  tmp.write("data/train/ham/b.txt", "meeting agenda");
  tmp.write("data/test/spam/c.txt", "free offer");
  const auto ds = ingest_dataset(tmp.file("data"));
  CHECK(ds.train.size() == 2);
  CHECK(ds.test.size() == 1);
  CHECK(ds.test[0].label == "spam");
}

TEST_CASE("ingest reads JSONL and reports malformed lines") {
  testsupport::TempDir tmp;
  tmp.write("ok.jsonl",
            "{\"label\": \"a\", \"text\": \"one two\"}\n"
            "{\"label\": \"b\", \"text\": \"three\"}\n"
            "{\"label\": \"a\", \"text\": \"four\"}\n");
  IngestOptions opt;
  opt.train_fraction = 0.67;
  const auto ds = ingest_dataset(tmp.file("ok.jsonl"), opt);
  CHECK(ds.train.size() + ds.test.size() == 3);

  tmp.write("bad.jsonl",
            "{\"label\": \"a\", \"text\": \"one\"}\n"
            "{\"text\": \"missing label\"}\n");
  try {
    ingest_dataset(tmp.file("bad.jsonl"), opt);
    FAIL("expected IoError");
  } catch (const IoError& ex) {
    CHECK(std::string(ex.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("ingest rejects unreadable paths") {
  CHECK_THROWS_AS(ingest_dataset("/nonexistent/path/xyz"), IoError);
}

TEST_CASE("ingest with a fixed seed is reproducible") {
  testsupport::TempDir tmp;
  for (int i = 0; i < 10; ++i) {
    tmp.write("data/c" + std::to_string(i % 2) + "/d" + std::to_string(i) + ".txt",
              "token" + std::to_string(i));
  }
  IngestOptions opt;
  opt.seed = 99;
  const auto a = ingest_dataset(tmp.file("data"), opt);
  const auto b = ingest_dataset(tmp.file("data"), opt);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].id == b.train[i].id);
  }
}

TEST_CASE("split_holdout sizes and determinism") {
  std::vector<Document> docs;
  for (int i = 0; i < 100; ++i) docs.push_back(doc({"t"}, "c", "d" + std::to_string(i)));
  const auto [rest, held] = split_holdout(docs, 0.2, 5);
  CHECK(rest.size() == 80);
  CHECK(held.size() == 20);

  std::vector<Document> five(docs.begin(), docs.begin() + 5);
  const auto [rest5, held5] = split_holdout(five, 0.2, 5);
  CHECK(rest5.size() == 4);
  CHECK(held5.size() == 1);

  const auto [ra, ha] = split_holdout(docs, 0.3, 17);
  const auto [rb, hb] = split_holdout(docs, 0.3, 17);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].id == rb[i].id);

  CHECK_THROWS_AS(split_holdout(docs, 0.0, 1), ValueError);
  CHECK_THROWS_AS(split_holdout(docs, 1.0, 1), ValueError);
}

TEST_CASE("stratified holdout keeps classes on both sides") {
  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) {
    docs.push_back(doc({"t"}, i % 4 == 0 ? "small" : "big", "d" + std::to_string(i)));
  }
  const auto [rest, held] = split_holdout_stratified(docs, 0.2, 11);
  CHECK(held.size() == 8);
  auto count = [](const std::vector<Document>& ds, const std::string& label) {
    std::size_t c = 0;
    for (const auto& d : ds) c += d.label == label;
    return c;
  };
  CHECK(count(held, "small") == 2);
  CHECK(count(held, "big") == 6);
  CHECK(count(rest, "small") == 8);
}
