#pragma once

namespace alpn {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace alpn
