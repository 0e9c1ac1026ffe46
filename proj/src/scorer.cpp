#include "specrank/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "specrank/error.hpp"

namespace specrank {

void ScorerConfig::validate() const {
  if (!(weight_w > 0.0) || !std::isfinite(weight_w)) {
    throw Error(ErrorKind::ValidationError, "weight_w must be positive");
  }
  if (token_limit && *token_limit < 1) {
    throw Error(ErrorKind::ValidationError, "token_limit must be >= 1");
  }
  if (backend == BackendKind::RemoteService && endpoint.empty()) {
    throw Error(ErrorKind::ValidationError, "remote backend needs an endpoint");
  }
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimMismatch, "cosine of dim " + std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()));
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw Error(ErrorKind::DegenerateVector, "cosine of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine(a.values(), b.values());
}

double score_from_cosine(double cos, const ScorerConfig& cfg) noexcept {
  return cfg.weight_w * (cfg.clamp_at_zero ? std::max(cos, 0.0) : cos);
}

double clip_score(const EmbeddingVector& text, const EmbeddingVector& image,
                  const ScorerConfig& cfg) {
  return score_from_cosine(cosine(text, image), cfg);
}

}  // namespace specrank
