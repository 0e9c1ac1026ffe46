#include <bit>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "specrank/contrast_set.hpp"
#include "specrank/embedding.hpp"
#include "specrank/embedding_store.hpp"
#include "test_util.hpp"

using namespace specrank;
using testutil::TempDir;

namespace {

EmbeddingStore random_store(std::mt19937_64& gen, std::size_t n, std::size_t dim) {
  // raw bit patterns cover subnormals, negative zero and large exponents
  std::uniform_int_distribution<std::uint32_t> bits;
  EmbeddingStore store;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) {
      do {
        x = std::bit_cast<float>(bits(gen));
      } while (!std::isfinite(x));
    }
    store.insert("k" + std::to_string(gen() % 1000000) + "_" + std::to_string(i), EmbeddingVector(v));
  }
  return store;
}

bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

}  // namespace

TEST(Normalize, Examples) {
  const auto n = normalize(EmbeddingVector({3.0f, 4.0f}));
  EXPECT_NEAR(n[0], 0.6f, 1e-7);
  EXPECT_NEAR(n[1], 0.8f, 1e-7);
  const auto u = normalize(EmbeddingVector({0.0f, 1.0f, 0.0f}));
  EXPECT_NEAR(u[1], 1.0f, 1e-7);
  EXPECT_NEAR(u[0], 0.0f, 1e-7);
  EXPECT_ERROR_KIND(normalize(EmbeddingVector({0.0f, 0.0f})), ErrorKind::DegenerateVector);
}

TEST(Normalize, UnitVectorsAreFixedPoints) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 200; ++i) {
    auto raw = testutil::gaussian_rows(gen, 1, 64);
    const auto once = normalize(EmbeddingVector(raw));
    EXPECT_NEAR(once.norm(), 1.0, 1e-6);
    const auto twice = normalize(once);
    for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(twice[k], once[k], 1e-7);
  }
}

TEST(EmbeddingVector, RejectsInvalid) {
  EXPECT_ERROR_KIND(EmbeddingVector(std::vector<float>{}), ErrorKind::InvalidVector);
  EXPECT_ERROR_KIND(EmbeddingVector({1.0f, std::numeric_limits<float>::quiet_NaN()}),
                    ErrorKind::InvalidVector);
  EXPECT_ERROR_KIND(EmbeddingVector({std::numeric_limits<float>::infinity()}),
                    ErrorKind::InvalidVector);
}

TEST(Store, InsertAndLookup) {
  EmbeddingStore s;
  s.insert("a", EmbeddingVector({1, 2, 3}));
  s.insert("b", EmbeddingVector({4, 5, 6}));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 3u);
  EXPECT_TRUE(s.contains("b"));
  EXPECT_EQ(s.get("b"), EmbeddingVector({4, 5, 6}));
  EXPECT_EQ(s.keys(), (std::vector<std::string>{"a", "b"}));
  EXPECT_ERROR_KIND(s.insert("c", EmbeddingVector({1, 2})), ErrorKind::DimMismatch);
  EXPECT_ERROR_KIND(s.insert("a", EmbeddingVector({1, 2, 3})), ErrorKind::DuplicateId);
  EXPECT_ERROR_KIND(s.row("zzz"), ErrorKind::IndexError);
}

TEST(Store, StoresRawValues) {
  EmbeddingStore s;
  s.insert("a", EmbeddingVector({3, 4}));
  EXPECT_EQ(s.get("a"), EmbeddingVector({3, 4}));
}

TEST(Persistence, SmallRoundTrip) {
  std::mt19937_64 gen(1);
  const auto store = random_store(gen, 10, 7);
  std::stringstream buf;
  save_embeddings(store, buf);
  const auto back = load_embeddings(buf);
  ASSERT_EQ(back.keys(), store.keys());
  for (const auto& k : store.keys()) EXPECT_TRUE(bitwise_equal(back.row(k), store.row(k)));
}

TEST(Persistence, RandomPayloadsAreBitExact) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t dim = 1 + gen() % 40;
    const auto store = random_store(gen, gen() % 50, dim);
    std::stringstream buf;
    save_embeddings(store, buf);
    const auto back = load_embeddings(buf);
    ASSERT_EQ(back.keys(), store.keys());
    for (const auto& k : store.keys()) ASSERT_TRUE(bitwise_equal(back.row(k), store.row(k)));
  }
}

TEST(Persistence, FileRoundTrip) {
  TempDir dir("emb");
  std::mt19937_64 gen(3);
  const auto store = random_store(gen, 30, 16);
  save_embeddings(store, dir.file("e.bin"));
  EXPECT_TRUE(load_embeddings(dir.file("e.bin")) == store);
  EXPECT_ERROR_KIND(load_embeddings(dir.file("missing.bin")), ErrorKind::MissingArtifact);
}

TEST(Persistence, LayoutIsLittleEndian) {
  EmbeddingStore s;
  s.insert("ab", EmbeddingVector({1.0f}));
  std::ostringstream out;
  save_embeddings(s, out);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 9u + 4 + 8 + 2 + 2 + 4);
  EXPECT_EQ(bytes.substr(0, 9), std::string(kEmbeddingMagic));
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 1u);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 1u);  // count
  EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 2u);  // key length
  EXPECT_EQ(bytes.substr(23, 2), "ab");
  // 1.0f = 0x3F800000
  EXPECT_EQ(static_cast<unsigned char>(bytes[28]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[27]), 0x80u);
}

TEST(Persistence, CorruptFilesRejected) {
  std::mt19937_64 gen(4);
  const auto store = random_store(gen, 5, 8);
  std::ostringstream out;
  save_embeddings(store, out);
  const std::string good = out.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::istringstream in1(bad_magic);
  EXPECT_ERROR_KIND(load_embeddings(in1), ErrorKind::FormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, good.size() / 2,
                          good.size() - 1}) {
    std::istringstream in(good.substr(0, cut));
    EXPECT_ERROR_KIND(load_embeddings(in), ErrorKind::FormatError);
  }
  std::istringstream trailing(good + "x");
  EXPECT_ERROR_KIND(load_embeddings(trailing), ErrorKind::FormatError);

  std::string nan_payload = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan_payload.data() + nan_payload.size() - 4, &nan, 4);
  std::istringstream in3(nan_payload);
  EXPECT_ERROR_KIND(load_embeddings(in3), ErrorKind::FormatError);
}

TEST(Store, ImageEmbeddingsComputedOncePerImage) {
  EmbeddingStore cache;
  std::size_t calls = 0;
  const auto compute = [&](std::size_t i) {
    return [&calls, i] {
      ++calls;
      return EmbeddingVector({static_cast<float>(i) + 1.0f, 1.0f});
    };
  };
  for (int condition = 0; condition < 4; ++condition) {
    for (std::size_t i = 0; i < 5000; ++i) {
      const auto row = cache.get_or_compute("img" + std::to_string(i), compute(i));
      ASSERT_EQ(row[0], static_cast<float>(i) + 1.0f);
    }
  }
  EXPECT_EQ(calls, 5000u);
  EXPECT_EQ(cache.size(), 5000u);
}

TEST(ContrastSet, NormalizesRowsAndIndexes) {
  EmbeddingStore s;
  s.insert("x", EmbeddingVector({3, 4}));
  s.insert("y", EmbeddingVector({0, 2}));
  const ContrastSet c(s, {"y", "x"});
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.index_of("x"), 1u);
  EXPECT_EQ(c.index_of("nope"), ContrastSet::npos);
  EXPECT_NEAR(c.row(1)[0], 0.6f, 1e-7);
  EXPECT_NEAR(c.row(0)[1], 1.0f, 1e-7);
  EXPECT_ERROR_KIND(ContrastSet(s, {"x"}), ErrorKind::EmptyInput);
  EXPECT_ERROR_KIND(ContrastSet(s, {"x", "x"}), ErrorKind::DuplicateId);
  EXPECT_ERROR_KIND(ContrastSet(s, {"x", "q"}), ErrorKind::IndexError);
}
