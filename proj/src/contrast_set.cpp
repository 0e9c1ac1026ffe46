#include "specrank/contrast_set.hpp"

#include <utility>

#include "specrank/error.hpp"

namespace specrank {

ContrastSet::ContrastSet(const EmbeddingStore& images, std::vector<std::string> image_ids)
    : ids_(std::move(image_ids)), dim_(images.dim()) {
  if (ids_.size() < 2) throw Error(ErrorKind::EmptyInput, "contrast set needs at least 2 images");
  rows_.reserve(ids_.size() * dim_);
  for (const auto& id : ids_) {
    auto r = images.row(id);
    rows_.insert(rows_.end(), r.begin(), r.end());
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    normalize_in_place({rows_.data() + i * dim_, dim_});
  }
  build_index();
}

ContrastSet::ContrastSet(std::vector<std::string> image_ids, std::vector<float> rows,
                         std::size_t dim)
    : ids_(std::move(image_ids)), rows_(std::move(rows)), dim_(dim) {
  if (ids_.size() < 2) throw Error(ErrorKind::EmptyInput, "contrast set needs at least 2 images");
  if (dim_ == 0 || rows_.size() != ids_.size() * dim_) {
    throw Error(ErrorKind::DimMismatch, "contrast rows do not match ids x dim");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    normalize_in_place({rows_.data() + i * dim_, dim_});
  }
  build_index();
}

void ContrastSet::build_index() {
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorKind::DuplicateId, "image '" + ids_[i] + "' listed twice in contrast set");
    }
  }
}

std::size_t ContrastSet::index_of(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  return it == index_.end() ? npos : it->second;
}

}  // namespace specrank
