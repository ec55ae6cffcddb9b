#pragma once

namespace floc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace floc
