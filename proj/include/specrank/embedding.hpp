#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace specrank {

/// Dense float32 embedding. Construction validates dim > 0 and that every
/// element is finite.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  double norm() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

/// Unit-L2 copy of `v`. Zero vectors throw DegenerateVector.
EmbeddingVector normalize(const EmbeddingVector& v);

/// In-place normalization of a raw row; same contract as normalize().
void normalize_in_place(std::span<float> row);

}  // namespace specrank
