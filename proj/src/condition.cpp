#include "specrank/condition.hpp"

#include <array>
#include <utility>

#include "specrank/error.hpp"

namespace specrank {

namespace {

constexpr std::array<std::pair<Condition::Kind, std::string_view>, 7> kNames{{
    {Condition::Kind::Original, "original"},
    {Condition::Kind::Verbose, "verbose"},
    {Condition::Kind::Composite, "composite"},
    {Condition::Kind::ImageToText, "image_to_text"},
    {Condition::Kind::Concise, "concise"},
    {Condition::Kind::HardLimited, "hard_limited"},
    {Condition::Kind::KLimited, "k_limited"},
}};

constexpr std::string_view kCustomPrefix = "custom:";

}  // namespace

Condition Condition::custom(std::string tag) {
  if (tag.empty()) throw Error(ErrorKind::ValidationError, "custom condition needs a tag");
  Condition c(Kind::Custom);
  c.tag_ = std::move(tag);
  return c;
}

Condition Condition::parse(std::string_view name) {
  if (name.starts_with(kCustomPrefix)) {
    return custom(std::string(name.substr(kCustomPrefix.size())));
  }
  std::string normalized(name);
  for (char& ch : normalized) {
    if (ch == '-') ch = '_';
  }
  for (const auto& [kind, canonical] : kNames) {
    if (normalized == canonical) return Condition(kind);
  }
  throw Error(ErrorKind::ValidationError, "unknown condition '" + std::string(name) + "'");
}

std::string Condition::name() const {
  if (kind_ == Kind::Custom) return std::string(kCustomPrefix) + tag_;
  for (const auto& [kind, canonical] : kNames) {
    if (kind == kind_) return std::string(canonical);
  }
  return "unknown";
}

}  // namespace specrank
