#include "specrank/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "specrank/error.hpp"
#include "specrank/unicode.hpp"

namespace specrank {

using nlohmann::json;

std::string_view to_string(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::TokenOverflow: return "token_overflow";
    case ExclusionReason::MissingEmbedding: return "missing_embedding";
  }
  return "unknown";
}

ExclusionReason parse_exclusion_reason(std::string_view name) {
  if (name == "token_overflow") return ExclusionReason::TokenOverflow;
  if (name == "missing_embedding") return ExclusionReason::MissingEmbedding;
  throw Error(ErrorKind::ValidationError, "unknown exclusion reason '" + std::string(name) + "'");
}

void Dataset::add_image(ImageRecord image) {
  if (image.image_id.empty()) throw Error(ErrorKind::ValidationError, "empty image_id");
  auto [it, inserted] = image_index_.emplace(image.image_id, images_.size());
  if (!inserted) throw Error(ErrorKind::DuplicateId, "duplicate image_id '" + image.image_id + "'");
  images_.push_back(std::move(image));
}

void Dataset::add_description(DescriptionRecord description) {
  if (description.desc_id.empty()) throw Error(ErrorKind::ValidationError, "empty desc_id");
  if (!image_index_.contains(description.target_image_id)) {
    throw Error(ErrorKind::DanglingTarget, "description '" + description.desc_id +
                                               "' targets unknown image '" +
                                               description.target_image_id + "'");
  }
  if (description.excluded != description.exclusion_reason.has_value()) {
    throw Error(ErrorKind::ValidationError,
                "description '" + description.desc_id + "': excluded needs a reason");
  }
  description.char_length = scalar_count(description.text);
  auto [it, inserted] = description_index_.emplace(description.desc_id, descriptions_.size());
  if (!inserted) {
    throw Error(ErrorKind::DuplicateId, "duplicate desc_id '" + description.desc_id + "'");
  }
  descriptions_.push_back(std::move(description));
}

const ImageRecord* Dataset::find_image(std::string_view image_id) const {
  auto it = image_index_.find(std::string(image_id));
  return it == image_index_.end() ? nullptr : &images_[it->second];
}

const DescriptionRecord* Dataset::find_description(std::string_view desc_id) const {
  auto it = description_index_.find(std::string(desc_id));
  return it == description_index_.end() ? nullptr : &descriptions_[it->second];
}

void Dataset::exclude(std::string_view desc_id, ExclusionReason reason) {
  auto it = description_index_.find(std::string(desc_id));
  if (it != description_index_.end()) descriptions_[it->second].exclude(reason);
}

std::vector<std::string> Dataset::sorted_image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(images_.size());
  for (const auto& img : images_) ids.push_back(img.image_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool Dataset::same_content(const Dataset& other) const {
  if (images_.size() != other.images_.size() ||
      descriptions_.size() != other.descriptions_.size()) {
    return false;
  }
  for (const auto& img : images_) {
    const auto* o = other.find_image(img.image_id);
    if (o == nullptr || !(*o == img)) return false;
  }
  for (const auto& d : descriptions_) {
    const auto* o = other.find_description(d.desc_id);
    if (o == nullptr || !(*o == d)) return false;
  }
  return true;
}

namespace {

std::string required_string(const json& j, const char* field, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorKind::ParseError, std::string("missing string field '") + field + "'", line);
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* field, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must be a string", line);
  }
  return it->get<std::string>();
}

ImageRecord parse_image(const json& j, std::size_t line) {
  ImageRecord img;
  img.image_id = required_string(j, "image_id", line);
  img.category = optional_string(j, "category", line);
  img.source_uri = optional_string(j, "source_uri", line);
  img.embedding_key = optional_string(j, "embedding_key", line);
  if (auto it = j.find("reference_captions"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(ErrorKind::ParseError, "reference_captions must be an array", line);
    }
    for (const auto& c : *it) {
      if (!c.is_string()) {
        throw Error(ErrorKind::ParseError, "reference_captions entries must be strings", line);
      }
      img.reference_captions.push_back(c.get<std::string>());
    }
  }
  return img;
}

DescriptionRecord parse_description(const json& j, std::size_t line) {
  DescriptionRecord d;
  d.desc_id = required_string(j, "desc_id", line);
  d.target_image_id = required_string(j, "target_image_id", line);
  d.text = required_string(j, "text", line);
  try {
    d.condition = Condition::parse(required_string(j, "condition", line));
    if (auto reason = optional_string(j, "exclusion_reason", line)) {
      d.exclude(parse_exclusion_reason(*reason));
    }
    d.char_length = scalar_count(d.text);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError && e.line()) throw;
    throw Error(ErrorKind::ParseError, e.what(), line);
  }
  return d;
}

}  // namespace

Dataset ingest_manifest(std::istream& in) {
  std::vector<std::pair<std::size_t, DescriptionRecord>> pending;
  Dataset dataset;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, e.what(), line);
    }
    if (!j.is_object()) throw Error(ErrorKind::ParseError, "record must be an object", line);
    const std::string kind = required_string(j, "kind", line);
    if (kind == "header") continue;
    if (kind == "image") {
      try {
        dataset.add_image(parse_image(j, line));
      } catch (const Error& e) {
        if (e.line()) throw;
        throw Error(e.kind(), e.what(), line);
      }
    } else if (kind == "description") {
      pending.emplace_back(line, parse_description(j, line));
    } else {
      throw Error(ErrorKind::ParseError, "unknown record kind '" + kind + "'", line);
    }
  }
  for (auto& [at, d] : pending) {
    try {
      dataset.add_description(std::move(d));
    } catch (const Error& e) {
      throw Error(e.kind(), e.what(), at);
    }
  }
  return dataset;
}

Dataset load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot open manifest '" + path + "'");
  return ingest_manifest(in);
}

void write_manifest(const Dataset& dataset, std::ostream& out) {
  for (const auto& img : dataset.images()) {
    json j{{"kind", "image"}, {"image_id", img.image_id}};
    if (img.category) j["category"] = *img.category;
    if (img.source_uri) j["source_uri"] = *img.source_uri;
    if (img.embedding_key) j["embedding_key"] = *img.embedding_key;
    if (!img.reference_captions.empty()) j["reference_captions"] = img.reference_captions;
    out << j.dump() << '\n';
  }
  for (const auto& d : dataset.descriptions()) {
    json j{{"kind", "description"},
           {"desc_id", d.desc_id},
           {"target_image_id", d.target_image_id},
           {"condition", d.condition.name()},
           {"text", d.text},
           {"char_length", d.char_length}};
    if (d.exclusion_reason) j["exclusion_reason"] = std::string(to_string(*d.exclusion_reason));
    out << j.dump() << '\n';
  }
}

}  // namespace specrank
