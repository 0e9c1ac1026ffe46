#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "specrank/condition.hpp"

namespace specrank {

enum class ExclusionReason { TokenOverflow, MissingEmbedding };

std::string_view to_string(ExclusionReason reason);
ExclusionReason parse_exclusion_reason(std::string_view name);

struct ImageRecord {
  std::string image_id;
  std::optional<std::string> category;
  std::optional<std::string> source_uri;
  std::optional<std::string> embedding_key;
  /// Human reference captions; used to build caption-conditioned prompts.
  std::vector<std::string> reference_captions;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DescriptionRecord {
  std::string desc_id;
  std::string target_image_id;
  Condition condition;
  std::string text;
  std::size_t char_length = 0;
  bool excluded = false;
  std::optional<ExclusionReason> exclusion_reason;

  void exclude(ExclusionReason reason) {
    excluded = true;
    exclusion_reason = reason;
  }

  friend bool operator==(const DescriptionRecord&, const DescriptionRecord&) = default;
};

/// Indexed image/description collection. Immutable once built by ingest.
class Dataset {
 public:
  Dataset() = default;

  /// Throws DuplicateId.
  void add_image(ImageRecord image);
  /// Recomputes char_length from text. Throws DuplicateId or DanglingTarget.
  void add_description(DescriptionRecord description);

  const std::vector<ImageRecord>& images() const noexcept { return images_; }
  const std::vector<DescriptionRecord>& descriptions() const noexcept {
    return descriptions_;
  }

  const ImageRecord* find_image(std::string_view image_id) const;
  const DescriptionRecord* find_description(std::string_view desc_id) const;

  /// Marks a description excluded; unknown ids are ignored.
  void exclude(std::string_view desc_id, ExclusionReason reason);

  /// Image ids in ascending byte order.
  std::vector<std::string> sorted_image_ids() const;

  /// Record-set equality, independent of insertion order.
  bool same_content(const Dataset& other) const;

 private:
  std::vector<ImageRecord> images_;
  std::vector<DescriptionRecord> descriptions_;
  std::unordered_map<std::string, std::size_t> image_index_;
  std::unordered_map<std::string, std::size_t> description_index_;
};

/// Parses a line-delimited manifest. Image lines may appear after the
/// descriptions that reference them; dangling targets are checked once the
/// whole stream is read. Blank lines and {"kind":"header"} records are skipped.
Dataset ingest_manifest(std::istream& in);
Dataset load_manifest(const std::string& path);

/// One manifest line per record, images first, in dataset order.
void write_manifest(const Dataset& dataset, std::ostream& out);

}  // namespace specrank
