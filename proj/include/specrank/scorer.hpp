#pragma once

#include <optional>
#include <span>
#include <string>

#include "specrank/embedding.hpp"

namespace specrank {

enum class BackendKind { Precomputed, RemoteService };

struct ScorerConfig {
  double weight_w = 2.5;
  bool clamp_at_zero = true;
  std::optional<int> token_limit = 77;
  BackendKind backend = BackendKind::Precomputed;
  std::string endpoint;  // only for RemoteService

  /// Throws ValidationError when weight_w <= 0, token_limit < 1 or a remote
  /// backend has no endpoint.
  void validate() const;
};

/// Cosine similarity clamped into [-1, 1]. Throws DimMismatch or
/// DegenerateVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(std::span<const float> a, std::span<const float> b);

/// CLIPScore form: w * max(cos, 0), or w * cos without clamping.
double score_from_cosine(double cos, const ScorerConfig& cfg) noexcept;

double clip_score(const EmbeddingVector& text, const EmbeddingVector& image,
                  const ScorerConfig& cfg);

}  // namespace specrank
