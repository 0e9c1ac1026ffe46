#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "specrank/embedding_store.hpp"

namespace specrank {

/// N x dim row-major block of unit-normalized image embeddings, row order
/// matching `image_ids()`.
class ContrastSet {
 public:
  /// Normalizes every row. Throws EmptyInput when fewer than two ids are
  /// given, IndexError when an id has no embedding, DuplicateId on repeats.
  ContrastSet(const EmbeddingStore& images, std::vector<std::string> image_ids);

  /// Takes pre-built rows (normalized here). Used by tests and benchmarks.
  ContrastSet(std::vector<std::string> image_ids, std::vector<float> rows,
              std::size_t dim);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& image_ids() const noexcept { return ids_; }
  std::span<const float> matrix() const noexcept { return rows_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {rows_.data() + i * dim_, dim_};
  }

  /// Row index of `image_id`, or npos.
  std::size_t index_of(std::string_view image_id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  void build_index();

  std::vector<std::string> ids_;
  std::vector<float> rows_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace specrank
