#pragma once

#include <cstddef>
#include <span>

#include "specrank/scorer.hpp"

namespace specrank::kernels {

/// Dot product with a fixed 16-lane accumulation order. The result depends
/// only on the inputs, never on threading.
float dot(const float* a, const float* b, std::size_t dim) noexcept;

/// Score of one normalized text row against one normalized image row, using
/// dot() and the same clamping the block kernels apply.
float pair_score(const float* text, const float* image, std::size_t dim,
                 const ScorerConfig& cfg) noexcept;

/// out[i * cols + j] = score(texts_i . images_j) for a block of text rows
/// against all image rows, serially. Reference path for the parallel kernel.
void score_block_serial(std::span<const float> texts, std::size_t rows,
                        std::span<const float> images, std::size_t cols,
                        std::size_t dim, const ScorerConfig& cfg, std::span<float> out);

/// Same contract as score_block_serial; register-tiled and parallel across
/// text rows with OpenMP. `threads` <= 0 uses the OpenMP default. Output is
/// bit-identical to score_block_serial for every thread count.
void score_block_parallel(std::span<const float> texts, std::size_t rows,
                          std::span<const float> images, std::size_t cols,
                          std::size_t dim, const ScorerConfig& cfg, std::span<float> out,
                          int threads = 0);

}  // namespace specrank::kernels
