#pragma once

#include <cstddef>
#include <string_view>

namespace specrank {

/// Number of Unicode scalar values in a UTF-8 string. Malformed sequences
/// throw Error{ParseError}.
std::size_t scalar_count(std::string_view utf8);

}  // namespace specrank
