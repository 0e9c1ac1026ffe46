#include <algorithm>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "../common/oracles.hpp"
#include "specrank/rank_engine.hpp"
#include "specrank/score_kernels.hpp"
#include "specrank/stats.hpp"
#include "test_util.hpp"

using namespace specrank;

namespace {

ContrastSet contrast_from(const std::vector<std::vector<float>>& rows) {
  std::vector<std::string> ids;
  std::vector<float> flat;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("i" + std::to_string(i));
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return ContrastSet(ids, flat, rows[0].size());
}

ContrastSet random_contrast(std::mt19937_64& gen, std::size_t n, std::size_t dim) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("i" + std::to_string(i));
  return ContrastSet(ids, testutil::gaussian_rows(gen, n, dim), dim);
}

}  // namespace

TEST(ScoreMatrix, HandExample) {
  const auto contrast = contrast_from({{1, 0}, {0.6f, 0.8f}});
  const auto texts = TextBatch::from_rows({1, 0, 0, 1}, 2);
  const auto m = score_matrix(texts, contrast, ScorerConfig{});
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.cols, 2u);
  EXPECT_NEAR(m.at(0, 0), 2.5f, 1e-6);
  EXPECT_NEAR(m.at(0, 1), 1.5f, 1e-6);
  EXPECT_NEAR(m.at(1, 0), 0.0f, 1e-6);
  EXPECT_NEAR(m.at(1, 1), 2.0f, 1e-6);
}

TEST(ScoreMatrix, DimMismatch) {
  const auto contrast = contrast_from({{1, 0}, {0, 1}});
  const auto texts = TextBatch::from_rows({1, 0, 0}, 3);
  EXPECT_ERROR_KIND(score_matrix(texts, contrast, ScorerConfig{}), ErrorKind::DimMismatch);
}

TEST(ScoreMatrix, MatchesScalarPath) {
  std::mt19937_64 gen(21);
  const auto contrast = random_contrast(gen, 200, 96);
  const auto texts = TextBatch::from_rows(testutil::gaussian_rows(gen, 50, 96), 96);
  const auto fast = score_matrix(texts, contrast, ScorerConfig{});
  const auto slow = score_matrix_reference(texts, contrast, ScorerConfig{});
  ASSERT_EQ(fast.values.size(), slow.values.size());
  for (std::size_t i = 0; i < fast.values.size(); ++i) {
    ASSERT_NEAR(fast.values[i], slow.values[i], 1e-5);
  }
}

TEST(ScoreMatrix, RandomShapesAndThreadCounts) {
  std::mt19937_64 gen(22);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t m = 1 + gen() % 80, n = 2 + gen() % 700, dim = 1 + gen() % 300;
    const auto contrast = random_contrast(gen, n, dim);
    const auto texts = TextBatch::from_rows(testutil::gaussian_rows(gen, m, dim), dim);
    ScorerConfig cfg;
    cfg.clamp_at_zero = trial % 2 == 0;
    const auto slow = score_matrix_reference(texts, contrast, cfg);
    std::vector<float> first;
    for (int threads : {1, 4, 8}) {
      ScoreOptions opt;
      opt.threads = threads;
      opt.block_rows = 1 + gen() % 64;
      const auto fast = score_matrix(texts, contrast, cfg, opt);
      for (std::size_t i = 0; i < fast.values.size(); ++i) {
        ASSERT_NEAR(fast.values[i], slow.values[i], 1e-5);
      }
      if (first.empty()) {
        first = fast.values;
      } else {
        ASSERT_EQ(0, std::memcmp(first.data(), fast.values.data(), first.size() * sizeof(float)));
      }
    }
  }
}

TEST(ScoreKernels, ParallelMatchesSerialBitwise) {
  std::mt19937_64 gen(23);
  for (std::size_t dim : {1u, 3u, 15u, 16u, 17u, 64u, 129u, 512u}) {
    const std::size_t rows = 37, cols = 301;
    auto texts = testutil::gaussian_rows(gen, rows, dim);
    auto images = testutil::gaussian_rows(gen, cols, dim);
    std::vector<float> a(rows * cols), b(rows * cols);
    kernels::score_block_serial(texts, rows, images, cols, dim, ScorerConfig{}, a);
    for (int threads : {1, 2, 8}) {
      kernels::score_block_parallel(texts, rows, images, cols, dim, ScorerConfig{}, b, threads);
      ASSERT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(float))) << "dim " << dim;
    }
  }
}

TEST(ScoreKernels, DotAgreesWithDouble) {
  std::mt19937_64 gen(24);
  for (std::size_t dim = 1; dim < 300; dim += 7) {
    auto a = testutil::gaussian_rows(gen, 1, dim);
    auto b = testutil::gaussian_rows(gen, 1, dim);
    double ref = 0;
    for (std::size_t k = 0; k < dim; ++k) ref += static_cast<double>(a[k]) * b[k];
    EXPECT_NEAR(kernels::dot(a.data(), b.data(), dim), ref, 1e-4 * std::sqrt(dim));
  }
}

TEST(ScoreMatrix, StreamsInBlocks) {
  std::mt19937_64 gen(25);
  const auto contrast = random_contrast(gen, 40, 8);
  const auto texts = TextBatch::from_rows(testutil::gaussian_rows(gen, 100, 8), 8);
  const auto full = score_matrix(texts, contrast, ScorerConfig{});
  ScoreOptions opt;
  opt.block_rows = 32;
  std::vector<std::size_t> sizes;
  std::size_t next = 0;
  stream_score_blocks(texts, contrast, ScorerConfig{}, opt,
                      [&](std::size_t first, std::size_t rows, std::span<const float> block) {
                        EXPECT_EQ(first, next);
                        next += rows;
                        sizes.push_back(rows);
                        for (std::size_t r = 0; r < rows; ++r)
                          for (std::size_t j = 0; j < 40; ++j)
                            ASSERT_EQ(block[r * 40 + j], full.at(first + r, j));
                      });
  EXPECT_EQ(sizes, (std::vector<std::size_t>{32, 32, 32, 4}));
}

TEST(TargetRank, Examples) {
  const std::vector<float> a{0.9f, 0.8f, 0.7f};
  EXPECT_EQ(target_rank(a, 0).rank, 1.0);
  const std::vector<float> b{0.9f, 0.5f, 0.5f, 0.1f};
  const auto r = target_rank(b, 1);
  EXPECT_EQ(r.rank, 2.5);
  EXPECT_EQ(r.n_strictly_greater, 1u);
  EXPECT_EQ(r.n_tied, 1u);
  EXPECT_ERROR_KIND(target_rank(b, 4), ErrorKind::IndexError);
  const std::vector<float> flat(5, 0.0f);
  EXPECT_EQ(target_rank(flat, 2).rank, 3.0);
}

TEST(TargetRank, MatchesSortOracle) {
  std::mt19937_64 gen(26);
  std::uniform_int_distribution<int> coarse(0, 40);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<float> row(1000);
    // coarse values force plenty of ties
    for (auto& v : row) v = trial % 2 ? static_cast<float>(coarse(gen)) / 8.0f
                                       : std::normal_distribution<float>()(gen);
    const std::size_t t = gen() % row.size();
    EXPECT_EQ(target_rank(row, t).rank, oracle::sorted_rank(row, t));
  }
}

TEST(TargetRank, PermutationEquivariant) {
  std::mt19937_64 gen(27);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> row(200);
    for (auto& v : row) v = static_cast<float>(gen() % 30);
    const auto before = target_rank(row, 0);
    std::shuffle(row.begin() + 1, row.end(), gen);
    EXPECT_EQ(target_rank(row, 0), before);
  }
}

TEST(RankAll, SelfSimilarTextRanksFirst) {
  std::mt19937_64 gen(28);
  auto inst = oracle::random_instance(gen, 50, 0, 32, 0.0);
  Dataset ds = inst.dataset;
  EmbeddingStore texts;
  for (int d = 0; d < 10; ++d) {
    const std::string target = inst.image_ids[gen() % 50];
    ds.add_description({"s" + std::to_string(d), target, {}, "x", 0, false, {}});
    texts.insert("s" + std::to_string(d), inst.images.get(target));
  }
  const ContrastSet contrast(inst.images, inst.image_ids);
  for (const auto& r : rank_all(ds, texts, contrast, ScorerConfig{}).results) {
    EXPECT_EQ(r.target_rank, 1.0);
    EXPECT_EQ(r.n_contrast, 50u);
  }
}

TEST(RankAll, MatchesPerRowOracle) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::random_instance(gen, trial == 0 ? 5 : 300, trial == 0 ? 3 : 60, 24, 0.1);
    const ContrastSet contrast(inst.images, inst.image_ids);
    RankOptions opt;
    opt.score.block_rows = 7;
    const auto out = rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt);
    ASSERT_EQ(out.results.size(), inst.dataset.descriptions().size());
    for (const auto& r : out.results) {
      const auto* d = inst.dataset.find_description(r.desc_id);
      const auto texts = TextBatch::from_rows(
          std::vector<float>(inst.texts.row(r.desc_id).begin(), inst.texts.row(r.desc_id).end()),
          24);
      const auto row = score_matrix(texts, contrast, ScorerConfig{});
      const std::size_t t = contrast.index_of(d->target_image_id);
      EXPECT_EQ(r.target_rank, oracle::sorted_rank(row.row(0), t)) << r.desc_id;
      EXPECT_EQ(r.target_score, row.at(0, t));
      EXPECT_EQ(r.condition, d->condition);
    }
    EXPECT_TRUE(std::is_sorted(out.results.begin(), out.results.end(),
                               [](auto& a, auto& b) { return a.desc_id < b.desc_id; }));
  }
}

TEST(RankAll, ExclusionsAndErrors) {
  std::mt19937_64 gen(30);
  auto inst = oracle::random_instance(gen, 10, 6, 8);
  inst.dataset.exclude("d0", ExclusionReason::TokenOverflow);
  EmbeddingStore texts;
  for (const auto& k : inst.texts.keys())
    if (k != "d1") texts.insert(k, inst.texts.get(k));
  const ContrastSet contrast(inst.images, inst.image_ids);
  const auto out = rank_all(inst.dataset, texts, contrast, ScorerConfig{});
  EXPECT_EQ(out.results.size(), 4u);
  ASSERT_EQ(out.excluded.size(), 2u);
  EXPECT_EQ(out.excluded[0].reason, ExclusionReason::TokenOverflow);
  EXPECT_EQ(out.excluded[1].reason, ExclusionReason::MissingEmbedding);

}

TEST(RankAll, DanglingTarget) {
  std::mt19937_64 gen(31);
  auto inst = oracle::random_instance(gen, 5, 0, 4);
  inst.dataset.add_description({"x", "img4", {}, "t", 0, false, {}});
  inst.texts.insert("x", EmbeddingVector({1, 2, 3, 4}));
  const ContrastSet partial(inst.images, {"img0", "img1", "img2"});
  EXPECT_ERROR_KIND(rank_all(inst.dataset, inst.texts, partial, ScorerConfig{}),
                    ErrorKind::DanglingTarget);
}

TEST(RankAll, RanksInvariantToWeight) {
  std::mt19937_64 gen(32);
  auto inst = oracle::random_instance(gen, 200, 80, 16);
  const ContrastSet contrast(inst.images, inst.image_ids);
  const auto base = rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}).results;
  for (double w : {0.5, 10.0}) {
    ScorerConfig cfg;
    cfg.weight_w = w;
    const auto other = rank_all(inst.dataset, inst.texts, contrast, cfg).results;
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (base[i].target_score > 0) EXPECT_EQ(other[i].target_rank, base[i].target_rank);
    }
  }
}

TEST(RankAll, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 gen(33);
  auto inst = oracle::random_instance(gen, 300, 100, 40);
  const ContrastSet contrast(inst.images, inst.image_ids);
  RankOptions one;
  one.score.threads = 1;
  RankOptions many;
  many.score.threads = 8;
  EXPECT_EQ(rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, one).results,
            rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, many).results);
}

TEST(RankAll, Subsampling) {
  std::mt19937_64 gen(34);
  auto inst = oracle::random_instance(gen, 100, 40, 12);
  const ContrastSet contrast(inst.images, inst.image_ids);
  RankOptions opt;
  opt.subsample = 20;
  opt.seed = 5;
  const auto a = rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt).results;
  const auto b = rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt).results;
  EXPECT_EQ(a, b);
  for (const auto& r : a) {
    EXPECT_EQ(r.n_contrast, 20u);
    EXPECT_GE(r.target_rank, 1.0);
    EXPECT_LE(r.target_rank, 20.0);
  }
  opt.seed = 6;
  EXPECT_NE(rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt).results, a);
  opt.subsample = 100;
  EXPECT_EQ(rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt).results,
            rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}).results);
  opt.subsample = 1;
  EXPECT_ERROR_KIND(rank_all(inst.dataset, inst.texts, contrast, ScorerConfig{}, opt),
                    ErrorKind::ValidationError);
}

TEST(RankAll, MonotoneDegradationWithNoise) {
  std::mt19937_64 gen(35);
  const std::size_t n = 500, dim = 64, per_level = 200;
  auto inst = oracle::random_instance(gen, n, 0, dim, 0.0);
  const ContrastSet contrast(inst.images, inst.image_ids);
  std::normal_distribution<float> nd;
  std::vector<double> sigmas{0, 0.25, 0.5, 1, 2}, means;
  for (double sigma : sigmas) {
    Dataset ds = inst.dataset;
    EmbeddingStore texts;
    for (std::size_t d = 0; d < per_level; ++d) {
      const std::size_t t = d % n;
      const auto target = contrast.row(t);
      std::vector<float> v(target.begin(), target.end());
      for (auto& x : v) x += static_cast<float>(sigma) * nd(gen);
      ds.add_description({"d" + std::to_string(d), inst.image_ids[t], {}, "x", 0, false, {}});
      texts.insert("d" + std::to_string(d), EmbeddingVector(v));
    }
    std::vector<double> ranks;
    for (const auto& r : rank_all(ds, texts, contrast, ScorerConfig{}).results)
      ranks.push_back(r.target_rank);
    means.push_back(stats::mean(ranks));
  }
  EXPECT_EQ(means[0], 1.0);
  for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GE(means[i], means[i - 1]);
  EXPECT_GE(stats::spearman_rho(sigmas, means), 0.9);
}

TEST(RankCdf, Examples) {
  const std::vector<double> a{1, 1, 2};
  const auto cdf = rank_cdf(a);
  ASSERT_EQ(cdf.size(), 2u);
  EXPECT_EQ(cdf[0].rank, 1.0);
  EXPECT_NEAR(cdf[0].cumulative, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(cdf[1], (CdfPoint{2.0, 1.0}));
  const std::vector<double> same{4.5, 4.5, 4.5};
  EXPECT_EQ(rank_cdf(same), (std::vector<CdfPoint>{{4.5, 1.0}}));
  EXPECT_ERROR_KIND(rank_cdf(std::vector<double>{}), ErrorKind::EmptyInput);
}

TEST(RankCdf, MatchesCountingOracle) {
  std::mt19937_64 gen(36);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ranks(1 + gen() % 300);
    for (auto& r : ranks) r = 1.0 + static_cast<double>(gen() % 50) / 2.0;
    const auto cdf = rank_cdf(ranks);
    const auto ref = oracle::counted_cdf(ranks);
    ASSERT_EQ(cdf.size(), ref.size());
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      EXPECT_EQ(cdf[i].rank, ref[i].first);
      EXPECT_NEAR(cdf[i].cumulative, ref[i].second, 1e-12);
    }
  }
}

TEST(RankCdf, DecreasingRanksDominate) {
  std::mt19937_64 gen(37);
  const auto eval = [](const std::vector<CdfPoint>& cdf, double x) {
    double v = 0;
    for (const auto& p : cdf)
      if (p.rank <= x) v = p.cumulative;
    return v;
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> b(50);
    for (auto& r : b) r = 1.0 + static_cast<double>(gen() % 100);
    std::vector<double> a = b;
    for (auto& r : a) r = std::max(1.0, r - static_cast<double>(gen() % 10));
    const auto ca = rank_cdf(a), cb = rank_cdf(b);
    for (const auto& p : ca) EXPECT_GE(eval(ca, p.rank), eval(cb, p.rank));
    for (const auto& p : cb) EXPECT_GE(eval(ca, p.rank), eval(cb, p.rank));
  }
}
