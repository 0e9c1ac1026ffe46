#include "specrank/prompts.hpp"

#include <numeric>

#include "specrank/error.hpp"

namespace specrank {

namespace {

std::string substitute(std::string text, std::string_view placeholder, std::string_view value) {
  for (auto pos = text.find(placeholder); pos != std::string::npos;
       pos = text.find(placeholder, pos + value.size())) {
    text.replace(pos, placeholder.size(), value);
  }
  return text;
}

const std::vector<PromptTemplate>& table() {
  using K = Condition::Kind;
  static const std::vector<PromptTemplate> templates{
      {Condition(K::Verbose), std::string(prompt_text::kVerbose) + "\n\n{original_caption}"},
      {Condition(K::Composite), std::string(prompt_text::kComposite) + "\n\n{all_five_captions}"},
      {Condition(K::ImageToText), std::string(prompt_text::kImageToText)},
      {Condition(K::Concise), std::string(prompt_text::kConcise)},
      {Condition(K::KLimited), std::string(prompt_text::kCharacterLimited)},
  };
  return templates;
}

}  // namespace

const PromptTemplate& builtin_template(const Condition& condition) {
  using K = Condition::Kind;
  const Condition lookup = condition.kind() == K::HardLimited ? Condition(K::KLimited) : condition;
  for (const auto& t : table()) {
    if (t.condition == lookup) return t;
  }
  throw Error(ErrorKind::ValidationError,
              "condition '" + condition.name() + "' has no generation prompt");
}

std::vector<PromptTemplate> builtin_templates() { return table(); }

bool needs_image(const Condition& condition) {
  using K = Condition::Kind;
  switch (condition.kind()) {
    case K::ImageToText:
    case K::Concise:
    case K::HardLimited:
    case K::KLimited:
      return true;
    default:
      return false;
  }
}

std::string build_prompt(const Condition& condition, const PromptInputs& inputs) {
  using K = Condition::Kind;
  const auto& tmpl = builtin_template(condition);
  switch (condition.kind()) {
    case K::Verbose:
      if (!inputs.original_caption) {
        throw Error(ErrorKind::ArityError, "verbose prompt needs the original caption");
      }
      return substitute(tmpl.template_text, "{original_caption}", *inputs.original_caption);
    case K::Composite: {
      if (inputs.captions.size() != 5) {
        throw Error(ErrorKind::ArityError, "composite prompt needs exactly 5 captions, got " +
                                               std::to_string(inputs.captions.size()));
      }
      std::string joined;
      for (std::size_t i = 0; i < inputs.captions.size(); ++i) {
        if (i > 0) joined += '\n';
        joined += inputs.captions[i];
      }
      return substitute(tmpl.template_text, "{all_five_captions}", joined);
    }
    case K::HardLimited:
      return substitute(tmpl.template_text, "{k}", std::to_string(kHardCharacterLimit));
    case K::KLimited:
      if (!inputs.k) throw Error(ErrorKind::MissingLimit, "k_limited prompt needs k");
      if (*inputs.k < 1) throw Error(ErrorKind::ValidationError, "k must be positive");
      return substitute(tmpl.template_text, "{k}", std::to_string(*inputs.k));
    default:
      return tmpl.template_text;
  }
}

int k_limit(const std::vector<std::size_t>& reference_caption_lengths) {
  if (reference_caption_lengths.empty()) {
    throw Error(ErrorKind::EmptyInput, "k_limit needs at least one caption length");
  }
  const std::size_t n = reference_caption_lengths.size();
  const std::size_t sum =
      std::accumulate(reference_caption_lengths.begin(), reference_caption_lengths.end(),
                      std::size_t{0});
  // round(sum / n) with halves rounded up, in integer arithmetic
  const std::size_t k = (2 * sum + n) / (2 * n);
  if (k == 0) throw Error(ErrorKind::ValidationError, "mean caption length rounds to 0");
  return static_cast<int>(k);
}

}  // namespace specrank
