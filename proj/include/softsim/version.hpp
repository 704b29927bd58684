#pragma once

namespace softsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace softsim
