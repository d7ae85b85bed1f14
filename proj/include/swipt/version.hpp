#pragma once

namespace swipt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace swipt
