#pragma once

namespace blowlab {

inline constexpr const char* kToolName = "blowlab";
inline constexpr const char* kVersion = "1.0.0";

} // namespace blowlab
