#include "specrank/rank_engine.hpp"

#include <algorithm>
#include <utility>

#include "specrank/error.hpp"
#include "specrank/hash.hpp"
#include "specrank/parallel.hpp"
#include "specrank/rng.hpp"
#include "specrank/score_kernels.hpp"

namespace specrank {

TextBatch TextBatch::from_rows(std::vector<float> raw, std::size_t dim) {
  if (dim == 0 || raw.size() % dim != 0) {
    throw Error(ErrorKind::DimMismatch, "text rows are not a multiple of dim");
  }
  TextBatch batch;
  batch.dim = dim;
  batch.rows = raw.size() / dim;
  batch.values = std::move(raw);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    normalize_in_place({batch.values.data() + i * dim, dim});
  }
  return batch;
}

namespace {

void check_dims(const TextBatch& texts, const ContrastSet& contrast) {
  if (texts.rows > 0 && texts.dim != contrast.dim()) {
    throw Error(ErrorKind::DimMismatch, "text dim " + std::to_string(texts.dim) +
                                            " vs image dim " + std::to_string(contrast.dim()));
  }
}

}  // namespace

void stream_score_blocks(const TextBatch& texts, const ContrastSet& contrast,
                         const ScorerConfig& cfg, const ScoreOptions& options,
                         const BlockSink& sink) {
  check_dims(texts, contrast);
  const std::size_t block_rows = std::max<std::size_t>(1, options.block_rows);
  const std::size_t n = contrast.size();
  const std::size_t dim = texts.dim;
  std::vector<float> block(std::min(block_rows, texts.rows) * n);
  for (std::size_t first = 0; first < texts.rows; first += block_rows) {
    const std::size_t rows = std::min(block_rows, texts.rows - first);
    std::span<const float> text_rows{texts.values.data() + first * dim, rows * dim};
    std::span<float> out{block.data(), rows * n};
    kernels::score_block_parallel(text_rows, rows, contrast.matrix(), n, dim, cfg, out,
                                  options.threads);
    sink(first, rows, out);
  }
}

ScoreMatrix score_matrix(const TextBatch& texts, const ContrastSet& contrast,
                         const ScorerConfig& cfg, const ScoreOptions& options) {
  check_dims(texts, contrast);
  ScoreMatrix m;
  m.rows = texts.rows;
  m.cols = contrast.size();
  m.values.resize(m.rows * m.cols);
  stream_score_blocks(texts, contrast, cfg, options,
                      [&](std::size_t first, std::size_t, std::span<const float> block) {
                        std::copy(block.begin(), block.end(), m.values.begin() + first * m.cols);
                      });
  return m;
}

ScoreMatrix score_matrix_reference(const TextBatch& texts, const ContrastSet& contrast,
                                   const ScorerConfig& cfg) {
  check_dims(texts, contrast);
  ScoreMatrix m;
  m.rows = texts.rows;
  m.cols = contrast.size();
  m.values.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const EmbeddingVector text(std::vector<float>(texts.values.begin() + i * texts.dim,
                                                  texts.values.begin() + (i + 1) * texts.dim));
    for (std::size_t j = 0; j < m.cols; ++j) {
      auto r = contrast.row(j);
      const EmbeddingVector image(std::vector<float>(r.begin(), r.end()));
      m.values[i * m.cols + j] = static_cast<float>(clip_score(text, image, cfg));
    }
  }
  return m;
}

TargetRank target_rank(std::span<const float> scores, std::size_t target_index) {
  if (target_index >= scores.size()) {
    throw Error(ErrorKind::IndexError, "target index " + std::to_string(target_index) +
                                           " out of range for " + std::to_string(scores.size()) +
                                           " scores");
  }
  const float target = scores[target_index];
  std::size_t greater = 0;
  std::size_t tied = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    greater += scores[j] > target;
    tied += scores[j] == target;
  }
  tied -= 1;  // the target itself
  TargetRank out;
  out.n_strictly_greater = greater;
  out.n_tied = tied;
  out.rank = 1.0 + static_cast<double>(greater) + static_cast<double>(tied) / 2.0;
  return out;
}

namespace {

struct RankRow {
  const DescriptionRecord* description;
  std::size_t target_index;
};

RankResult make_result(const DescriptionRecord& d, const TargetRank& tr, float target_score,
                       std::size_t n_contrast) {
  RankResult r;
  r.desc_id = d.desc_id;
  r.condition = d.condition;
  r.target_rank = tr.rank;
  r.target_score = target_score;
  r.n_contrast = n_contrast;
  r.n_strictly_greater = tr.n_strictly_greater;
  r.n_tied = tr.n_tied;
  r.char_length = d.char_length;
  return r;
}

/// Knuth's selection sampling: `k` of the `n` indices other than `skip`, in
/// ascending order.
std::vector<std::size_t> sample_alternatives(SplitMix64& gen, std::size_t n, std::size_t skip,
                                             std::size_t k) {
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::size_t remaining = n - 1;
  for (std::size_t j = 0; j < n && picked.size() < k; ++j) {
    if (j == skip) continue;
    const std::size_t needed = k - picked.size();
    if (gen.below(remaining) < needed) picked.push_back(j);
    --remaining;
  }
  return picked;
}

}  // namespace

RankOutput rank_all(const Dataset& dataset, const EmbeddingStore& text_embeddings,
                    const ContrastSet& contrast, const ScorerConfig& cfg,
                    const RankOptions& options) {
  cfg.validate();
  const std::size_t n = contrast.size();
  if (options.subsample && (*options.subsample < 2 || *options.subsample > n)) {
    throw Error(ErrorKind::ValidationError, "subsample must be in [2, " + std::to_string(n) + "]");
  }

  std::vector<const DescriptionRecord*> ordered;
  ordered.reserve(dataset.descriptions().size());
  for (const auto& d : dataset.descriptions()) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->desc_id < b->desc_id; });

  RankOutput output;
  std::vector<RankRow> rows;
  std::vector<float> raw;
  for (const auto* d : ordered) {
    if (d->excluded) {
      output.excluded.push_back({d->desc_id, d->condition, *d->exclusion_reason});
      continue;
    }
    if (!text_embeddings.contains(d->desc_id)) {
      output.excluded.push_back({d->desc_id, d->condition, ExclusionReason::MissingEmbedding});
      continue;
    }
    const std::size_t target = contrast.index_of(d->target_image_id);
    if (target == ContrastSet::npos) {
      throw Error(ErrorKind::DanglingTarget, "target image '" + d->target_image_id +
                                                 "' of '" + d->desc_id +
                                                 "' is not in the contrast set");
    }
    auto emb = text_embeddings.row(d->desc_id);
    raw.insert(raw.end(), emb.begin(), emb.end());
    rows.push_back({d, target});
  }
  if (rows.empty()) return output;

  const TextBatch texts = TextBatch::from_rows(std::move(raw), text_embeddings.dim());
  check_dims(texts, contrast);
  output.results.resize(rows.size());

  if (!options.subsample || *options.subsample == n) {
    stream_score_blocks(texts, contrast, cfg, options.score,
                        [&](std::size_t first, std::size_t count, std::span<const float> block) {
                          for (std::size_t r = 0; r < count; ++r) {
                            const auto& row = rows[first + r];
                            auto scores = block.subspan(r * n, n);
                            output.results[first + r] =
                                make_result(*row.description, target_rank(scores, row.target_index),
                                            scores[row.target_index], n);
                          }
                        });
    return output;
  }

  const std::size_t k = *options.subsample - 1;
  const std::size_t dim = texts.dim;
  const auto count = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel num_threads(resolve_threads(options.score.threads))
  {
    std::vector<float> scores(k + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      auto gen = SplitMix64::substream(options.seed, fnv1a64(row.description->desc_id));
      const auto picked = sample_alternatives(gen, n, row.target_index, k);
      const float* text = texts.values.data() + static_cast<std::size_t>(i) * dim;
      scores[0] = kernels::pair_score(text, contrast.row(row.target_index).data(), dim, cfg);
      for (std::size_t s = 0; s < k; ++s) {
        scores[s + 1] = kernels::pair_score(text, contrast.row(picked[s]).data(), dim, cfg);
      }
      output.results[static_cast<std::size_t>(i)] =
          make_result(*row.description, target_rank(scores, 0), scores[0], k + 1);
    }
  }
  return output;
}

std::vector<CdfPoint> rank_cdf(std::span<const double> ranks) {
  if (ranks.empty()) throw Error(ErrorKind::EmptyInput, "rank_cdf of no ranks");
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> cdf;
  const auto total = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.push_back({sorted[i], static_cast<double>(i + 1) / total});
  }
  return cdf;
}

}  // namespace specrank
