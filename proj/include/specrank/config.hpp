#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specrank/condition.hpp"
#include "specrank/hash.hpp"
#include "specrank/scorer.hpp"

namespace specrank {

/// Everything a CLI run can be configured with. Loaded from a sectioned
/// key=value file, then overridden by command-line flags.
struct RunConfig {
  struct Paths {
    std::string manifest;
    std::string image_embeddings;
    std::string text_embeddings;
    std::string exclusions;
    std::string ranks;
    std::string preferences;
    std::string specificity;
    std::string ledger;
    std::string out_dir = "specrank-out";
  } paths;

  ScorerConfig scorer;

  struct Rank {
    std::optional<std::size_t> subsample;
    std::uint64_t seed = 0;
    std::size_t block_rows = 256;
  } rank;

  struct Stats {
    std::size_t bin_width = 10;
    std::size_t min_bin_count = 10;
    double trim_low = 2.5;
    double trim_high = 97.5;
    std::size_t resamples = 2000;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::string reference = "original";
  } stats;

  struct Generate {
    std::string endpoint;
    std::string model_tag = "unspecified";
    std::size_t parallelism = 4;
    std::uint64_t seed = 0;
  } generate;

  std::vector<Condition> conditions;
  int threads = 0;

  /// Applies a flat "section.key" -> value map. Throws ValidationError for
  /// unknown keys or unparsable values.
  void apply(const std::map<std::string, std::string>& entries);

  /// Canonical "section.key=value" lines, sorted. Thread count and file
  /// locations are left out; neither changes results.
  std::string canonical() const;

  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string checksum() const;
};

/// Reads an INI-style file into "section.key" entries.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Parses "a,b,c" into conditions. Throws ValidationError on unknown names.
std::vector<Condition> parse_condition_list(const std::string& list);

}  // namespace specrank
