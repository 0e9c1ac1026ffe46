#include "specrank/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"
#include "specrank/error.hpp"
#include "specrank/hash.hpp"

namespace specrank::analysis {

using nlohmann::json;

std::string dummy_name(const Condition& c) { return "condition[" + c.name() + "]"; }

namespace {

constexpr const char* kIntercept = "(intercept)";

bool selected(const Condition& c, std::span<const Condition> conditions) {
  return conditions.empty() || std::find(conditions.begin(), conditions.end(), c) != conditions.end();
}

std::vector<const RankResult*> filter(std::span<const RankResult> results,
                                      std::span<const Condition> conditions) {
  std::vector<const RankResult*> rows;
  for (const auto& r : results) {
    if (selected(r.condition, conditions)) rows.push_back(&r);
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no rank results for the selected conditions");
  return rows;
}

double mean_of(std::span<const double> s) { return stats::mean(s); }

stats::BootstrapOptions reseeded(const stats::BootstrapOptions& boot, std::string_view label,
                                 std::string name) {
  stats::BootstrapOptions out = boot;
  out.seed = SplitMix64::substream(boot.seed, fnv1a64(label))();
  out.statistic_name = std::move(name);
  return out;
}

}  // namespace

Design rank_design(std::span<const RankResult> results, const Condition& reference,
                   bool include_length, std::span<const Condition> conditions) {
  const auto rows = filter(results, conditions);
  std::set<Condition> levels;
  for (const auto* r : rows) levels.insert(r->condition);
  if (!levels.contains(reference)) {
    throw Error(ErrorKind::ValidationError,
                "reference condition '" + reference.name() + "' has no rank results");
  }
  std::vector<Condition> dummies;
  for (const auto& c : levels) {
    if (c != reference) dummies.push_back(c);
  }

  Design d;
  d.names.push_back(kIntercept);
  for (const auto& c : dummies) d.names.push_back(dummy_name(c));
  if (include_length) d.names.push_back("char_length");

  const auto n = static_cast<Eigen::Index>(rows.size());
  d.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *rows[static_cast<std::size_t>(i)];
    d.x(i, 0) = 1.0;
    for (std::size_t k = 0; k < dummies.size(); ++k) {
      if (r.condition == dummies[k]) d.x(i, static_cast<Eigen::Index>(k + 1)) = 1.0;
    }
    if (include_length) d.x(i, d.x.cols() - 1) = static_cast<double>(r.char_length);
    d.y[i] = r.target_rank;
  }
  return d;
}

Design length_only_design(std::span<const RankResult> results,
                          std::span<const Condition> conditions) {
  const auto rows = filter(results, conditions);
  Design d;
  d.names = {kIntercept, "char_length"};
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.x.resize(n, 2);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *rows[static_cast<std::size_t>(i)];
    d.x(i, 0) = 1.0;
    d.x(i, 1) = static_cast<double>(r.char_length);
    d.y[i] = r.target_rank;
  }
  return d;
}

ConditionEffect condition_effect(std::span<const RankResult> results, const Condition& reference,
                                 std::span<const Condition> conditions) {
  const Design reduced = length_only_design(results, conditions);
  const Design full = rank_design(results, reference, true, conditions);
  ConditionEffect effect;
  effect.reduced = stats::ols_fit(reduced.x, reduced.y, reduced.names);
  effect.full = stats::ols_fit(full.x, full.y, full.names);
  effect.delta_r2 = stats::delta_r2(effect.reduced, effect.full);
  return effect;
}

std::vector<PreferenceTrial> read_preference_trials(std::istream& in) {
  std::vector<PreferenceTrial> trials;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      if (j.value("kind", "") == "header") continue;
      PreferenceTrial t;
      t.trial_id = j.at("trial_id").get<std::string>();
      t.image_id = j.at("image_id").get<std::string>();
      t.condition_a = Condition::parse(j.at("condition_a").get<std::string>());
      t.condition_b = Condition::parse(j.at("condition_b").get<std::string>());
      t.length_a = j.at("length_a").get<std::size_t>();
      t.length_b = j.at("length_b").get<std::size_t>();
      const auto chosen = j.at("chosen").get<std::string>();
      if (chosen == "a") t.chosen = Side::A;
      else if (chosen == "b") t.chosen = Side::B;
      else throw Error(ErrorKind::ParseError, "chosen must be \"a\" or \"b\"", line);
      t.participant_id = j.value("participant_id", "");
      if (t.condition_a == t.condition_b) {
        throw Error(ErrorKind::ValidationError,
                    "trial '" + t.trial_id + "' compares a condition with itself", line);
      }
      trials.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, e.what(), line);
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(ErrorKind::ParseError, e.what(), line);
    }
  }
  return trials;
}

Design preference_design(std::span<const PreferenceTrial> trials, const Condition& reference,
                         bool intercept) {
  if (trials.empty()) throw Error(ErrorKind::EmptyInput, "no preference trials");
  std::set<Condition> levels;
  for (const auto& t : trials) {
    levels.insert(t.condition_a);
    levels.insert(t.condition_b);
  }
  if (!levels.contains(reference)) {
    throw Error(ErrorKind::ValidationError,
                "reference condition '" + reference.name() + "' does not occur in the trials");
  }
  std::vector<Condition> dummies;
  for (const auto& c : levels) {
    if (c != reference) dummies.push_back(c);
  }

  Design d;
  if (intercept) d.names.push_back(kIntercept);
  for (const auto& c : dummies) d.names.push_back(dummy_name(c));
  d.names.push_back("length_diff");
  const Eigen::Index offset = intercept ? 1 : 0;
  const auto n = static_cast<Eigen::Index>(trials.size());
  d.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = trials[static_cast<std::size_t>(i)];
    if (intercept) d.x(i, 0) = 1.0;
    for (std::size_t k = 0; k < dummies.size(); ++k) {
      const double v = (t.condition_a == dummies[k] ? 1.0 : 0.0) -
                       (t.condition_b == dummies[k] ? 1.0 : 0.0);
      d.x(i, offset + static_cast<Eigen::Index>(k)) = v;
    }
    d.x(i, d.x.cols() - 1) = static_cast<double>(t.length_a) - static_cast<double>(t.length_b);
    d.y[i] = t.chosen == Side::A ? 1.0 : 0.0;
  }
  return d;
}

std::vector<PairwisePreference> pairwise_preferences(std::span<const PreferenceTrial> trials,
                                                     const stats::BootstrapOptions& boot) {
  // Outcome is reported for the later condition in enum order, e.g. the
  // composite share in composite-vs-original trials.
  std::map<std::pair<Condition, Condition>, std::vector<double>> wins;
  for (const auto& t : trials) {
    const bool a_later = t.condition_b < t.condition_a;
    const Condition& focal = a_later ? t.condition_a : t.condition_b;
    const Condition& other = a_later ? t.condition_b : t.condition_a;
    const bool focal_won = (t.chosen == Side::A) == a_later;
    wins[{focal, other}].push_back(focal_won ? 1.0 : 0.0);
  }
  std::vector<PairwisePreference> out;
  for (auto& [pair, outcomes] : wins) {
    std::sort(outcomes.begin(), outcomes.end());
    PairwisePreference p;
    p.winner_candidate = pair.first;
    p.other = pair.second;
    p.n = outcomes.size();
    const std::string label = pair.first.name() + "_over_" + pair.second.name();
    if (outcomes.size() >= 2) {
      p.share = stats::bootstrap_ci<double>(outcomes, mean_of, reseeded(boot, label, label));
    } else {
      p.share.statistic_name = label;
      p.share.point = p.share.lower = p.share.upper = outcomes.front();
      p.share.level = boot.level;
      p.share.n_resamples = 0;
      p.share.seed = boot.seed;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ConditionSummary> condition_summaries(std::span<const RankResult> results,
                                                  const stats::BootstrapOptions& boot) {
  std::map<Condition, std::vector<const RankResult*>> groups;
  for (const auto& r : results) groups[r.condition].push_back(&r);
  std::vector<ConditionSummary> out;
  for (const auto& [condition, rows] : groups) {
    std::vector<double> ranks;
    std::vector<double> lengths;
    for (const auto* r : rows) {
      ranks.push_back(r->target_rank);
      lengths.push_back(static_cast<double>(r->char_length));
    }
    std::sort(ranks.begin(), ranks.end());
    std::sort(lengths.begin(), lengths.end());
    ConditionSummary s;
    s.condition = condition;
    s.n = rows.size();
    s.mean_length = stats::mean(lengths);
    if (ranks.size() >= 2) {
      s.mean_rank = stats::bootstrap_ci<double>(ranks, mean_of,
                                                reseeded(boot, condition.name(), "mean_rank"));
    } else {
      s.mean_rank.statistic_name = "mean_rank";
      s.mean_rank.point = s.mean_rank.lower = s.mean_rank.upper = ranks.front();
      s.mean_rank.level = boot.level;
      s.mean_rank.n_resamples = 0;
      s.mean_rank.seed = boot.seed;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace specrank::analysis
