#pragma once

namespace plemc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "plemc";

} // namespace plemc
