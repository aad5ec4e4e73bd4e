#pragma once

#include <string>
#include <string_view>

namespace vfxopt {

/// Standard alphabet with padding.
std::string base64_encode(std::string_view bytes);

/// Throws Error(format) on malformed input.
std::string base64_decode(std::string_view text);

} // namespace vfxopt
