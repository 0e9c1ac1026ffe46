#include "specrank/embed_service.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>

#include "json.hpp"
#include "specrank/error.hpp"
#include "specrank/retry.hpp"

namespace specrank {

using nlohmann::json;

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

EmbeddingClient::EmbeddingClient(std::shared_ptr<Transport> transport, EmbedClientOptions options)
    : transport_(std::move(transport)), options_(options) {
  if (!transport_) throw Error(ErrorKind::ValidationError, "embedding client needs a transport");
  if (options_.batch_size == 0) options_.batch_size = 1;
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

EmbedResult EmbeddingClient::embed_batch(PayloadKind kind, const std::vector<std::string>& items,
                                         std::size_t begin, std::size_t end) const {
  json request{{"kind", kind == PayloadKind::Text ? "text" : "image"}, {"items", json::array()}};
  for (std::size_t i = begin; i < end; ++i) {
    request["items"].push_back(kind == PayloadKind::Text ? items[i] : base64_encode(items[i]));
  }
  const std::string body = request.dump();
  const std::string reply = with_retries(options_.retry, [&] { return transport_->post(body); });

  const std::size_t count = end - begin;
  json response;
  try {
    response = json::parse(reply);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProtocolError, std::string("unparsable embedding response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("embeddings") ||
      !response["embeddings"].is_array()) {
    throw Error(ErrorKind::ProtocolError, "embedding response lacks an embeddings array");
  }
  const auto& embeddings = response["embeddings"];
  if (embeddings.size() != count) {
    throw Error(ErrorKind::ProtocolError, "service returned " + std::to_string(embeddings.size()) +
                                              " embeddings for " + std::to_string(count) +
                                              " inputs");
  }
  if (!response.contains("dim") || !response["dim"].is_number_unsigned() ||
      response["dim"].get<std::size_t>() == 0) {
    throw Error(ErrorKind::ProtocolError, "embedding response lacks a positive dim");
  }
  const auto dim = response["dim"].get<std::size_t>();

  std::vector<bool> overflow(count, false);
  EmbedResult result;
  if (auto it = response.find("overflow_indices"); it != response.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorKind::ProtocolError, "overflow_indices must be an array");
    for (const auto& idx : *it) {
      if (!idx.is_number_unsigned() || idx.get<std::size_t>() >= count) {
        throw Error(ErrorKind::ProtocolError, "overflow index out of range");
      }
      overflow[idx.get<std::size_t>()] = true;
    }
  }

  result.vectors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (overflow[i]) {
      result.vectors.emplace_back(std::nullopt);
      result.overflow_indices.push_back(begin + i);
      continue;
    }
    const auto& row = embeddings[i];
    if (!row.is_array() || row.size() != dim) {
      throw Error(ErrorKind::ProtocolError, "embedding " + std::to_string(begin + i) +
                                                " does not have dim " + std::to_string(dim));
    }
    std::vector<float> values;
    values.reserve(dim);
    for (const auto& v : row) {
      if (!v.is_number()) throw Error(ErrorKind::ProtocolError, "embedding value is not a number");
      const auto f = v.get<float>();
      if (!std::isfinite(f)) throw Error(ErrorKind::ProtocolError, "embedding value is not finite");
      values.push_back(f);
    }
    result.vectors.emplace_back(EmbeddingVector(std::move(values)));
  }
  return result;
}

EmbedResult EmbeddingClient::embed(PayloadKind kind, const std::vector<std::string>& items) const {
  if (items.empty()) throw Error(ErrorKind::EmptyInput, "embed called with an empty batch");
  const std::size_t batches = (items.size() + options_.batch_size - 1) / options_.batch_size;
  std::vector<EmbedResult> partial(batches);
  std::vector<std::exception_ptr> errors(batches);
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t b = next++; b < batches; b = next++) {
      const std::size_t begin = b * options_.batch_size;
      const std::size_t end = std::min(items.size(), begin + options_.batch_size);
      try {
        partial[b] = embed_batch(kind, items, begin, end);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(options_.max_in_flight, batches);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EmbedResult merged;
  merged.vectors.reserve(items.size());
  std::size_t dim = 0;
  for (auto& part : partial) {
    for (auto& v : part.vectors) {
      if (v) {
        if (dim == 0) dim = v->dim();
        if (v->dim() != dim) throw Error(ErrorKind::ProtocolError, "batches returned different dims");
      }
      merged.vectors.push_back(std::move(v));
    }
    merged.overflow_indices.insert(merged.overflow_indices.end(), part.overflow_indices.begin(),
                                   part.overflow_indices.end());
  }
  return merged;
}

}  // namespace specrank
