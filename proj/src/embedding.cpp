#include "specrank/embedding.hpp"

#include <cmath>
#include <utility>

#include "specrank/error.hpp"

namespace specrank {

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::InvalidVector, "embedding must have dim > 0");
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidVector, "embedding has non-finite value");
  }
}

double EmbeddingVector::norm() const noexcept {
  double sum = 0.0;
  for (float v : values_) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

void normalize_in_place(std::span<float> row) {
  double sum = 0.0;
  for (float v : row) sum += static_cast<double>(v) * v;
  if (!(sum > 0.0)) throw Error(ErrorKind::DegenerateVector, "cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(sum);
  for (float& v : row) v = static_cast<float>(v * inv);
}

EmbeddingVector normalize(const EmbeddingVector& v) {
  std::vector<float> out(v.values().begin(), v.values().end());
  normalize_in_place(out);
  return EmbeddingVector(std::move(out));
}

}  // namespace specrank
