#include "specrank/score_kernels.hpp"

#include <algorithm>
#include <cstddef>

#include "specrank/error.hpp"
#include "specrank/parallel.hpp"

namespace specrank::kernels {

namespace {

constexpr std::size_t kLanes = 16;
constexpr std::size_t kRowTile = 4;     // text rows sharing one image-row load
constexpr std::size_t kRowChunk = 32;   // text rows per parallel work item
constexpr std::size_t kImageChunk = 128;

/// Dot products of R text rows against one image row. Each of the R results
/// is accumulated in exactly the order dot() uses, so tiling never changes a
/// value.
template <std::size_t R>
inline void dot_tile(const float* const* a, const float* b, std::size_t dim, float* out) noexcept {
  float acc[R][kLanes] = {};
  const std::size_t full = dim - dim % kLanes;
  const float* __restrict rows[R];
  for (std::size_t r = 0; r < R; ++r) rows[r] = a[r];
  for (std::size_t i = 0; i < full; i += kLanes) {
    float bv[kLanes];
#pragma GCC unroll 16
    for (std::size_t k = 0; k < kLanes; ++k) bv[k] = b[i + k];
#pragma GCC unroll 4
    for (std::size_t r = 0; r < R; ++r) {
#pragma GCC unroll 16
      for (std::size_t k = 0; k < kLanes; ++k) acc[r][k] += rows[r][i + k] * bv[k];
    }
  }
  for (std::size_t i = full; i < dim; ++i) {
    for (std::size_t r = 0; r < R; ++r) acc[r][i - full] += a[r][i] * b[i];
  }
  for (std::size_t r = 0; r < R; ++r) {
    // Pairwise tree over lanes: fixed shape, independent of dim.
    for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
      for (std::size_t k = 0; k < width; ++k) acc[r][k] += acc[r][k + width];
    }
    out[r] = acc[r][0];
  }
}

inline float to_score(float dot, const ScorerConfig& cfg) noexcept {
  const double cos = std::clamp(static_cast<double>(dot), -1.0, 1.0);
  return static_cast<float>(score_from_cosine(cos, cfg));
}

void check_shapes(std::span<const float> texts, std::size_t rows, std::span<const float> images,
                  std::size_t cols, std::size_t dim, std::span<float> out) {
  if (texts.size() != rows * dim || images.size() != cols * dim) {
    throw Error(ErrorKind::DimMismatch, "score block inputs do not match rows/cols x dim");
  }
  if (out.size() < rows * cols) throw Error(ErrorKind::DimMismatch, "score block output too small");
}

}  // namespace

float dot(const float* a, const float* b, std::size_t dim) noexcept {
  float out = 0.0f;
  dot_tile<1>(&a, b, dim, &out);
  return out;
}

float pair_score(const float* text, const float* image, std::size_t dim,
                 const ScorerConfig& cfg) noexcept {
  return to_score(dot(text, image, dim), cfg);
}

void score_block_serial(std::span<const float> texts, std::size_t rows,
                        std::span<const float> images, std::size_t cols, std::size_t dim,
                        const ScorerConfig& cfg, std::span<float> out) {
  check_shapes(texts, rows, images, cols, dim, out);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = to_score(dot(&texts[i * dim], &images[j * dim], dim), cfg);
    }
  }
}

void score_block_parallel(std::span<const float> texts, std::size_t rows,
                          std::span<const float> images, std::size_t cols, std::size_t dim,
                          const ScorerConfig& cfg, std::span<float> out, int threads) {
  check_shapes(texts, rows, images, cols, dim, out);
  const auto chunks = static_cast<std::ptrdiff_t>((rows + kRowChunk - 1) / kRowChunk);
  const float* text_data = texts.data();
  const float* image_data = images.data();
  float* out_data = out.data();

#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t chunk = 0; chunk < chunks; ++chunk) {
    const std::size_t row_begin = static_cast<std::size_t>(chunk) * kRowChunk;
    const std::size_t row_end = std::min(rows, row_begin + kRowChunk);
    for (std::size_t j0 = 0; j0 < cols; j0 += kImageChunk) {
      const std::size_t j1 = std::min(cols, j0 + kImageChunk);
      std::size_t i = row_begin;
      for (; i + kRowTile <= row_end; i += kRowTile) {
        const float* a[kRowTile];
        for (std::size_t r = 0; r < kRowTile; ++r) a[r] = text_data + (i + r) * dim;
        float dots[kRowTile];
        for (std::size_t j = j0; j < j1; ++j) {
          dot_tile<kRowTile>(a, image_data + j * dim, dim, dots);
          for (std::size_t r = 0; r < kRowTile; ++r) {
            out_data[(i + r) * cols + j] = to_score(dots[r], cfg);
          }
        }
      }
      for (; i < row_end; ++i) {
        const float* a = text_data + i * dim;
        for (std::size_t j = j0; j < j1; ++j) {
          out_data[i * cols + j] = to_score(dot(a, image_data + j * dim, dim), cfg);
        }
      }
    }
  }
}

}  // namespace specrank::kernels
