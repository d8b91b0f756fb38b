#pragma once

namespace leo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace leo
