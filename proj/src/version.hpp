#pragma once

namespace hyperbend {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hyperbend
