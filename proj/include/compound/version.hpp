#pragma once

namespace compound {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace compound
