#include "specrank/rank_io.hpp"

#include <string>

#include "json.hpp"
#include "specrank/error.hpp"

namespace specrank {

using nlohmann::json;

void write_rank_results(std::ostream& out, std::span<const RankResult> results) {
  for (const auto& r : results) {
    const json j{{"desc_id", r.desc_id},
                 {"condition", r.condition.name()},
                 {"target_rank", r.target_rank},
                 {"target_score", r.target_score},
                 {"n_contrast", r.n_contrast},
                 {"char_length", r.char_length},
                 {"n_strictly_greater", r.n_strictly_greater},
                 {"n_tied", r.n_tied}};
    out << j.dump() << '\n';
  }
}

namespace {

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      if (j.value("kind", "") == "header") continue;
      fn(j);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, e.what(), line);
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(ErrorKind::ParseError, e.what(), line);
    }
  }
}

}  // namespace

std::vector<RankResult> read_rank_results(std::istream& in) {
  std::vector<RankResult> out;
  for_each_record(in, [&](const json& j) {
    RankResult r;
    r.desc_id = j.at("desc_id").get<std::string>();
    r.condition = Condition::parse(j.at("condition").get<std::string>());
    r.target_rank = j.at("target_rank").get<double>();
    r.target_score = j.at("target_score").get<double>();
    r.n_contrast = j.at("n_contrast").get<std::size_t>();
    r.char_length = j.at("char_length").get<std::size_t>();
    r.n_strictly_greater = j.value("n_strictly_greater", std::size_t{0});
    r.n_tied = j.value("n_tied", std::size_t{0});
    if (r.target_rank < 1.0 || r.target_rank > static_cast<double>(r.n_contrast)) {
      throw Error(ErrorKind::ValidationError, "target_rank outside [1, n_contrast]");
    }
    out.push_back(std::move(r));
  });
  return out;
}

void write_exclusions(std::ostream& out, std::span<const ExcludedDescription> excluded) {
  for (const auto& e : excluded) {
    const json j{{"desc_id", e.desc_id},
                 {"condition", e.condition.name()},
                 {"reason", std::string(to_string(e.reason))}};
    out << j.dump() << '\n';
  }
}

std::vector<ExcludedDescription> read_exclusions(std::istream& in) {
  std::vector<ExcludedDescription> out;
  for_each_record(in, [&](const json& j) {
    ExcludedDescription e;
    e.desc_id = j.at("desc_id").get<std::string>();
    e.condition = j.contains("condition") ? Condition::parse(j["condition"].get<std::string>())
                                          : Condition();
    e.reason = parse_exclusion_reason(j.at("reason").get<std::string>());
    out.push_back(std::move(e));
  });
  return out;
}

}  // namespace specrank
