#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specrank/condition.hpp"
#include "specrank/rank_engine.hpp"
#include "specrank/stats.hpp"

namespace specrank::analysis {

/// Regression inputs with named columns.
struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

/// Treatment-coded column name for a condition, e.g. "condition[composite]".
std::string dummy_name(const Condition& c);

/// rank ~ 1 + condition + [char_length]. Rows are restricted to
/// `conditions` (all present when empty); `reference` gets no dummy column and
/// must be among them. Throws ValidationError otherwise.
Design rank_design(std::span<const RankResult> results, const Condition& reference,
                   bool include_length, std::span<const Condition> conditions = {});

/// rank ~ 1 + char_length for one condition.
Design length_only_design(std::span<const RankResult> results,
                          std::span<const Condition> conditions);

/// Condition term significance beyond length: reduced = rank ~ length,
/// full = rank ~ condition + length, on the same rows.
struct ConditionEffect {
  stats::RegressionFit reduced;
  stats::RegressionFit full;
  double delta_r2 = 0.0;
};

ConditionEffect condition_effect(std::span<const RankResult> results,
                                 const Condition& reference,
                                 std::span<const Condition> conditions = {});

enum class Side { A, B };

struct PreferenceTrial {
  std::string trial_id;
  std::string image_id;
  Condition condition_a;
  Condition condition_b;
  std::size_t length_a = 0;
  std::size_t length_b = 0;
  Side chosen = Side::A;
  std::string participant_id;
};

/// Line-delimited trials: {"trial_id","image_id","condition_a","condition_b",
/// "length_a","length_b","chosen":"a"|"b","participant_id"}. Throws
/// ParseError (with line) or ValidationError when condition_a == condition_b.
std::vector<PreferenceTrial> read_preference_trials(std::istream& in);

/// chosen ~ condition + length for pairwise trials. The response is
/// 1{chosen == a}; each non-reference condition c contributes
/// 1{a == c} - 1{b == c} and length enters as length_a - length_b. An
/// intercept (side bias) column is added when `intercept` is set.
Design preference_design(std::span<const PreferenceTrial> trials,
                         const Condition& reference, bool intercept = false);

/// Share of trials won per condition pair, with bootstrap CIs.
struct PairwisePreference {
  Condition winner_candidate;  // the condition whose win share is reported
  Condition other;
  std::size_t n = 0;
  stats::BootstrapCI share;
};

std::vector<PairwisePreference> pairwise_preferences(std::span<const PreferenceTrial> trials,
                                                     const stats::BootstrapOptions& boot);

struct ConditionSummary {
  Condition condition;
  std::size_t n = 0;
  double mean_length = 0.0;
  stats::BootstrapCI mean_rank;
};

std::vector<ConditionSummary> condition_summaries(std::span<const RankResult> results,
                                                  const stats::BootstrapOptions& boot);

}  // namespace specrank::analysis
