#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specrank/condition.hpp"

namespace specrank {

/// Instruction wording sent to the generation model, one per built-in
/// generated condition. Placeholders: {original_caption}, {all_five_captions}
/// and {k}.
struct PromptTemplate {
  Condition condition;
  std::string template_text;
};

/// Character cap used by the hard-limited condition.
inline constexpr int kHardCharacterLimit = 200;

namespace prompt_text {
inline constexpr std::string_view kVerbose =
    "Given this description, generate one longer description that expresses the same "
    "information as in the original description but in a more verbose way. In other "
    "words, use more words but say the same thing as given. Do not augment the "
    "description with any emotional or made-up information. Only output the longer "
    "description and nothing else.";
inline constexpr std::string_view kComposite =
    "Given these 5 descriptions, generate one longer, final description that combines "
    "all information in the individual descriptions. Do not augment the description "
    "with any emotional or made-up information. Only output the longer description and "
    "nothing else.";
inline constexpr std::string_view kImageToText =
    "Describe this image and don't introduce any emotional information. Just describe "
    "what's there.";
inline constexpr std::string_view kConcise =
    "Describe this image and don't introduce any emotional information. Just describe "
    "what's there. Be as concise as possible.";
inline constexpr std::string_view kCharacterLimited =
    "Describe this image and don't introduce any emotional information. Just describe "
    "what's there. Don't exceed {k} characters.";
}  // namespace prompt_text

/// Built-in template for a generated condition. Original and custom
/// conditions have none (ValidationError).
const PromptTemplate& builtin_template(const Condition& condition);

/// The five distinct built-in instruction texts (hard- and k-limited share
/// the character-limited wording).
std::vector<PromptTemplate> builtin_templates();

struct PromptInputs {
  std::optional<std::string> original_caption;
  std::vector<std::string> captions;
  std::optional<int> k;
};

/// Renders the instruction with inputs substituted. Verbose needs
/// original_caption; composite needs exactly five captions (ArityError);
/// k_limited needs k (MissingLimit). Hard-limited always uses 200.
std::string build_prompt(const Condition& condition, const PromptInputs& inputs);

/// Mean of reference caption lengths rounded half-up. Throws EmptyInput.
int k_limit(const std::vector<std::size_t>& reference_caption_lengths);

/// Whether the condition's prompt carries the image instead of captions.
bool needs_image(const Condition& condition);

}  // namespace specrank
