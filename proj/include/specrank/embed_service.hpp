#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "specrank/embedding.hpp"

namespace specrank {

/// Request/response transport carrying UTF-8 JSON bodies. Implementations
/// throw TransportError for retryable failures.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post(const std::string& body) = 0;
};

/// HTTP POST to `url` ("http://host:port/path"). An optional bearer token is
/// sent as an Authorization header.
std::unique_ptr<Transport> make_http_transport(const std::string& url,
                                               std::optional<std::string> bearer_token = std::nullopt,
                                               std::chrono::seconds timeout = std::chrono::seconds(120));

enum class PayloadKind { Text, Image };

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

struct EmbedClientOptions {
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
};

/// Per-input outcome: a vector, or nullopt when the service flagged the item
/// as over the token limit.
struct EmbedResult {
  std::vector<std::optional<EmbeddingVector>> vectors;
  std::vector<std::size_t> overflow_indices;
};

/// Client for the embedding service wire contract:
///   request  {"kind":"text"|"image","items":[...]}  (image items base64)
///   response {"dim":D,"embeddings":[[...],...],"overflow_indices":[...]}
/// Inputs are split into batches; a batch is the unit of retry.
class EmbeddingClient {
 public:
  EmbeddingClient(std::shared_ptr<Transport> transport, EmbedClientOptions options = {});

  /// Throws BackendUnavailable after exhausting retries and ProtocolError on
  /// malformed or mismatched responses. Image items are raw bytes and are
  /// base64-encoded here.
  EmbedResult embed(PayloadKind kind, const std::vector<std::string>& items) const;

 private:
  EmbedResult embed_batch(PayloadKind kind, const std::vector<std::string>& items,
                          std::size_t begin, std::size_t end) const;

  std::shared_ptr<Transport> transport_;
  EmbedClientOptions options_;
};

std::string base64_encode(std::string_view bytes);

}  // namespace specrank
