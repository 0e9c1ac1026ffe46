#include "specrank/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <utility>

#include "specrank/error.hpp"

namespace specrank {

void EmbeddingStore::insert(std::string key, const EmbeddingVector& v) {
  if (key.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::ValidationError, "embedding key longer than 65535 bytes");
  }
  if (!keys_.empty() && v.dim() != dim_) {
    throw Error(ErrorKind::DimMismatch, "embedding '" + key + "' has dim " +
                                            std::to_string(v.dim()) + ", store has " +
                                            std::to_string(dim_));
  }
  if (index_.contains(key)) throw Error(ErrorKind::DuplicateId, "duplicate embedding key '" + key + "'");
  dim_ = v.dim();
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), v.values().begin(), v.values().end());
}

bool EmbeddingStore::contains(std::string_view key) const {
  return index_.contains(std::string(key));
}

std::span<const float> EmbeddingStore::row(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) throw Error(ErrorKind::IndexError, "no embedding for '" + std::string(key) + "'");
  return {data_.data() + it->second * dim_, dim_};
}

EmbeddingVector EmbeddingStore::get(std::string_view key) const {
  auto r = row(key);
  return EmbeddingVector(std::vector<float>(r.begin(), r.end()));
}

std::span<const float> EmbeddingStore::get_or_compute(
    const std::string& key, const std::function<EmbeddingVector()>& compute) {
  if (!contains(key)) insert(key, compute());
  return row(key);
}

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T take_le(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::FormatError, std::string("truncated embedding file while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_embeddings(const EmbeddingStore& store, std::ostream& out) {
  std::string buf(kEmbeddingMagic);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(store.dim()));
  put_le<std::uint64_t>(buf, store.size());
  for (const auto& key : store.keys()) {
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(key.size()));
    buf += key;
    for (float v : store.row(key)) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::IoError, "failed writing embedding file");
}

void save_embeddings(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  save_embeddings(store, out);
}

EmbeddingStore load_embeddings(std::istream& in) {
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader reader(bytes);
  if (reader.take(kEmbeddingMagic.size(), "magic") != kEmbeddingMagic) {
    throw Error(ErrorKind::FormatError, "bad embedding file magic");
  }
  const auto dim = reader.take_le<std::uint32_t>("dim");
  const auto count = reader.take_le<std::uint64_t>("count");
  if (count > 0 && dim == 0) throw Error(ErrorKind::FormatError, "zero dimension with entries");
  // Each entry needs at least 2 + 4*dim bytes; reject impossible counts early.
  if (count > reader.remaining() / (2 + 4ULL * dim)) {
    throw Error(ErrorKind::FormatError, "truncated embedding file: count exceeds payload");
  }

  EmbeddingStore store;
  std::vector<float> values(dim);
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto key_len = reader.take_le<std::uint16_t>("key length");
    std::string key(reader.take(key_len, "key"));
    for (auto& v : values) {
      v = std::bit_cast<float>(reader.take_le<std::uint32_t>("values"));
      if (!std::isfinite(v)) throw Error(ErrorKind::FormatError, "non-finite value for '" + key + "'");
    }
    try {
      store.insert(std::move(key), EmbeddingVector(values));
    } catch (const Error& err) {
      throw Error(ErrorKind::FormatError, err.what());
    }
  }
  if (reader.remaining() != 0) throw Error(ErrorKind::FormatError, "trailing bytes after last entry");
  return store;
}

EmbeddingStore load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot open embedding file '" + path + "'");
  return load_embeddings(in);
}

}  // namespace specrank
