#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specrank/condition.hpp"
#include "specrank/contrast_set.hpp"
#include "specrank/dataset.hpp"
#include "specrank/embedding_store.hpp"
#include "specrank/scorer.hpp"

namespace specrank {

/// Dense M x N float32 scores, row-major.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
};

/// Row-major block of text embeddings; rows are normalized on construction.
struct TextBatch {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  static TextBatch from_rows(std::vector<float> raw, std::size_t dim);
};

struct ScoreOptions {
  std::size_t block_rows = 256;
  int threads = 0;  // <= 0: OpenMP default
};

/// Materializes the full matrix. Throws DimMismatch.
ScoreMatrix score_matrix(const TextBatch& texts, const ContrastSet& contrast,
                         const ScorerConfig& cfg, const ScoreOptions& options = {});

/// Serial scalar path: every entry is clip_score() on the raw vectors.
ScoreMatrix score_matrix_reference(const TextBatch& texts, const ContrastSet& contrast,
                                   const ScorerConfig& cfg);

/// Streams the matrix in row blocks of at most `options.block_rows` rows. The
/// callback receives the first row index and a (rows x N) block; the block
/// buffer is reused between calls.
using BlockSink =
    std::function<void(std::size_t first_row, std::size_t rows, std::span<const float> block)>;
void stream_score_blocks(const TextBatch& texts, const ContrastSet& contrast,
                         const ScorerConfig& cfg, const ScoreOptions& options,
                         const BlockSink& sink);

struct TargetRank {
  double rank = 1.0;
  std::size_t n_strictly_greater = 0;
  std::size_t n_tied = 0;

  friend bool operator==(const TargetRank&, const TargetRank&) = default;
};

/// rank = 1 + #{j != t : s_j > s_t} + #{j != t : s_j == s_t} / 2.
/// Throws IndexError when target_index is out of range.
TargetRank target_rank(std::span<const float> scores, std::size_t target_index);

struct RankResult {
  std::string desc_id;
  Condition condition;
  double target_rank = 1.0;
  double target_score = 0.0;
  std::size_t n_contrast = 0;
  std::size_t n_strictly_greater = 0;
  std::size_t n_tied = 0;
  std::size_t char_length = 0;

  friend bool operator==(const RankResult&, const RankResult&) = default;
};

struct ExcludedDescription {
  std::string desc_id;
  Condition condition;
  ExclusionReason reason;
};

struct RankOptions {
  ScoreOptions score;
  /// Contrast subsampling: each description is ranked against its target plus
  /// (subsample - 1) alternatives drawn without replacement. Unset means
  /// exhaustive comparison.
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
};

struct RankOutput {
  std::vector<RankResult> results;          // ordered by desc_id
  std::vector<ExcludedDescription> excluded;  // ordered by desc_id
};

/// Ranks every non-excluded description. Descriptions without a text
/// embedding are reported as excluded (missing_embedding). Throws
/// DanglingTarget when a target image is absent from the contrast set.
RankOutput rank_all(const Dataset& dataset, const EmbeddingStore& text_embeddings,
                    const ContrastSet& contrast, const ScorerConfig& cfg,
                    const RankOptions& options = {});

struct CdfPoint {
  double rank;
  double cumulative;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Empirical CDF at each distinct rank, ascending. Throws EmptyInput.
std::vector<CdfPoint> rank_cdf(std::span<const double> ranks);

}  // namespace specrank
