#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "specrank/rank_engine.hpp"

namespace specrank {

/// One JSON object per result: desc_id, condition, target_rank, target_score,
/// n_contrast, char_length, n_strictly_greater, n_tied.
void write_rank_results(std::ostream& out, std::span<const RankResult> results);

/// Skips {"kind":"header"} lines. Throws ParseError with the line number.
std::vector<RankResult> read_rank_results(std::istream& in);

void write_exclusions(std::ostream& out, std::span<const ExcludedDescription> excluded);
std::vector<ExcludedDescription> read_exclusions(std::istream& in);

}  // namespace specrank
