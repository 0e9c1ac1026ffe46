#include "specrank/unicode.hpp"

#include <cstdint>

#include "specrank/error.hpp"

namespace specrank {

std::size_t scalar_count(std::string_view utf8) {
  std::size_t count = 0;
  std::size_t i = 0;
  const auto fail = [&](const char* why) {
    throw Error(ErrorKind::ParseError,
                std::string("invalid UTF-8 at byte ") + std::to_string(i) + ": " + why);
  };
  while (i < utf8.size()) {
    const auto lead = static_cast<std::uint8_t>(utf8[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      fail("bad lead byte");
    }
    if (i + len > utf8.size()) fail("truncated sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<std::uint8_t>(utf8[i + k]);
      if ((cont & 0xC0) != 0x80) fail("bad continuation byte");
      cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr std::uint32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[len]) fail("overlong encoding");
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("not a scalar value");
    i += len;
    ++count;
  }
  return count;
}

}  // namespace specrank
