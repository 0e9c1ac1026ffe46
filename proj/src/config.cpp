#include "specrank/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "specrank/error.hpp"

namespace specrank {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::ValidationError, "config key '" + key + "': bad number '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorKind::ValidationError, "config key '" + key + "': bad boolean '" + value + "'");
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace

std::vector<Condition> parse_condition_list(const std::string& list) {
  std::vector<Condition> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(Condition::parse(item.substr(b, e - b + 1)));
  }
  return out;
}

void RunConfig::apply(const std::map<std::string, std::string>& entries) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const auto size_of = [](const std::string& k, const std::string& v) {
    return parse_number<std::size_t>(k, v);
  };
  const auto u64_of = [](const std::string& k, const std::string& v) {
    return parse_number<std::uint64_t>(k, v);
  };
  const auto double_of = [](const std::string& k, const std::string& v) {
    return parse_number<double>(k, v);
  };
  const std::map<std::string, Setter> setters{
      {"paths.manifest", [&](auto&, auto& v) { paths.manifest = v; }},
      {"paths.image_embeddings", [&](auto&, auto& v) { paths.image_embeddings = v; }},
      {"paths.text_embeddings", [&](auto&, auto& v) { paths.text_embeddings = v; }},
      {"paths.exclusions", [&](auto&, auto& v) { paths.exclusions = v; }},
      {"paths.ranks", [&](auto&, auto& v) { paths.ranks = v; }},
      {"paths.preferences", [&](auto&, auto& v) { paths.preferences = v; }},
      {"paths.specificity", [&](auto&, auto& v) { paths.specificity = v; }},
      {"paths.ledger", [&](auto&, auto& v) { paths.ledger = v; }},
      {"paths.out_dir", [&](auto&, auto& v) { paths.out_dir = v; }},
      {"scorer.weight", [&](auto& k, auto& v) { scorer.weight_w = double_of(k, v); }},
      {"scorer.clamp", [&](auto& k, auto& v) { scorer.clamp_at_zero = parse_bool(k, v); }},
      {"scorer.token_limit",
       [&](auto& k, auto& v) {
         if (v == "none") scorer.token_limit.reset();
         else scorer.token_limit = parse_number<int>(k, v);
       }},
      {"scorer.endpoint",
       [&](auto&, auto& v) {
         scorer.endpoint = v;
         scorer.backend = v.empty() ? BackendKind::Precomputed : BackendKind::RemoteService;
       }},
      {"rank.subsample",
       [&](auto& k, auto& v) {
         if (v == "none" || v.empty()) rank.subsample.reset();
         else rank.subsample = size_of(k, v);
       }},
      {"rank.seed", [&](auto& k, auto& v) { rank.seed = u64_of(k, v); }},
      {"rank.block_rows", [&](auto& k, auto& v) { rank.block_rows = size_of(k, v); }},
      {"stats.bin_width", [&](auto& k, auto& v) { stats.bin_width = size_of(k, v); }},
      {"stats.min_bin_count", [&](auto& k, auto& v) { stats.min_bin_count = size_of(k, v); }},
      {"stats.trim_low", [&](auto& k, auto& v) { stats.trim_low = double_of(k, v); }},
      {"stats.trim_high", [&](auto& k, auto& v) { stats.trim_high = double_of(k, v); }},
      {"stats.resamples", [&](auto& k, auto& v) { stats.resamples = size_of(k, v); }},
      {"stats.level", [&](auto& k, auto& v) { stats.level = double_of(k, v); }},
      {"stats.seed", [&](auto& k, auto& v) { stats.seed = u64_of(k, v); }},
      {"stats.reference",
       [&](auto&, auto& v) { stats.reference = Condition::parse(v).name(); }},
      {"generate.endpoint", [&](auto&, auto& v) { generate.endpoint = v; }},
      {"generate.model_tag", [&](auto&, auto& v) { generate.model_tag = v; }},
      {"generate.parallelism", [&](auto& k, auto& v) { generate.parallelism = size_of(k, v); }},
      {"generate.seed", [&](auto& k, auto& v) { generate.seed = u64_of(k, v); }},
      {"run.conditions", [&](auto&, auto& v) { conditions = parse_condition_list(v); }},
      {"run.threads", [&](auto& k, auto& v) { threads = parse_number<int>(k, v); }},
      {"run.seed",
       [&](auto& k, auto& v) {
         rank.seed = stats.seed = generate.seed = u64_of(k, v);
       }},
  };
  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::ValidationError, "unknown config key '" + key + "'");
    it->second(key, value);
  }
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"scorer.weight", format_double(scorer.weight_w)},
      {"scorer.clamp", scorer.clamp_at_zero ? "true" : "false"},
      {"scorer.token_limit", scorer.token_limit ? std::to_string(*scorer.token_limit) : "none"},
      {"scorer.endpoint", scorer.endpoint},
      {"rank.subsample", rank.subsample ? std::to_string(*rank.subsample) : "none"},
      {"rank.seed", std::to_string(rank.seed)},
      {"rank.block_rows", std::to_string(rank.block_rows)},
      {"stats.bin_width", std::to_string(stats.bin_width)},
      {"stats.min_bin_count", std::to_string(stats.min_bin_count)},
      {"stats.trim_low", format_double(stats.trim_low)},
      {"stats.trim_high", format_double(stats.trim_high)},
      {"stats.resamples", std::to_string(stats.resamples)},
      {"stats.level", format_double(stats.level)},
      {"stats.seed", std::to_string(stats.seed)},
      {"stats.reference", stats.reference},
      {"generate.endpoint", generate.endpoint},
      {"generate.model_tag", generate.model_tag},
      {"generate.parallelism", std::to_string(generate.parallelism)},
      {"generate.seed", std::to_string(generate.seed)},
  };
  std::string list;
  for (const auto& c : conditions) list += (list.empty() ? "" : ",") + c.name();
  kv["run.conditions"] = list;
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::checksum() const { return fmt::format("{:016x}", fnv1a64(canonical())); }

std::map<std::string, std::string> read_config_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::ValidationError, std::string("config file: ") + e.what());
  }
  std::map<std::string, std::string> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorKind::ValidationError,
                  "config key '" + section + "' must live in a [section]");
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

}  // namespace specrank
