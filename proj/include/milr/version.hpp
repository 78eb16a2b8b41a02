#pragma once

namespace milr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace milr
