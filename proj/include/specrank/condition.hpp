#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace specrank {

/// Description condition label. Built-in kinds cover the dataset variants and
/// the length-constraint variants; anything else is carried as a custom tag.
class Condition {
 public:
  enum class Kind {
    Original,
    Verbose,
    Composite,
    ImageToText,
    Concise,
    HardLimited,
    KLimited,
    Custom,
  };

  Condition() = default;
  explicit Condition(Kind kind) : kind_(kind) {}

  static Condition custom(std::string tag);

  /// Accepts the canonical snake_case names ("image_to_text") and the hyphenated
  /// spelling ("image-to-text"). Names outside the built-in set become custom
  /// tags only when prefixed "custom:"; anything else is a ValidationError.
  static Condition parse(std::string_view name);

  Kind kind() const noexcept { return kind_; }
  const std::string& tag() const noexcept { return tag_; }
  bool is_custom() const noexcept { return kind_ == Kind::Custom; }

  /// Canonical name; custom tags render as "custom:<tag>".
  std::string name() const;

  friend bool operator==(const Condition&, const Condition&) = default;
  friend std::strong_ordering operator<=>(const Condition& a, const Condition& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    return a.tag_.compare(b.tag_) <=> 0;
  }

 private:
  Kind kind_ = Kind::Original;
  std::string tag_;
};

}  // namespace specrank
