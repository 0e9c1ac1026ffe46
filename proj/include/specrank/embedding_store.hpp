#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "specrank/embedding.hpp"

namespace specrank {

/// Insertion-ordered map from key to raw (unnormalized) embedding, all of one
/// dimension. Rows live in one contiguous buffer.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  /// Throws DimMismatch when `v.dim()` differs from earlier entries and
  /// DuplicateId when the key already exists.
  void insert(std::string key, const EmbeddingVector& v);

  bool contains(std::string_view key) const;
  /// Throws IndexError for unknown keys.
  std::span<const float> row(std::string_view key) const;
  EmbeddingVector get(std::string_view key) const;

  std::size_t size() const noexcept { return keys_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return keys_.empty(); }
  const std::vector<std::string>& keys() const noexcept { return keys_; }

  /// Returns the cached row for `key`, invoking `compute` only on a miss.
  std::span<const float> get_or_compute(
      const std::string& key, const std::function<EmbeddingVector()>& compute);

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::string_view kEmbeddingMagic{"SPEC-EMB\x01", 9};

/// Binary layout: magic (9 bytes), u32 dim, u64 count, then per entry a u16
/// key length, the UTF-8 key and dim little-endian f32 values.
void save_embeddings(const EmbeddingStore& store, std::ostream& out);
void save_embeddings(const EmbeddingStore& store, const std::string& path);

/// Throws FormatError on bad magic, truncation, trailing bytes or non-finite
/// values. Nothing is returned unless the whole file parsed.
EmbeddingStore load_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::string& path);

}  // namespace specrank
