#pragma once

namespace corrml {

inline constexpr const char* kToolName = "corrml";
inline constexpr const char* kToolVersion = "corrml 0.1.0";

}  // namespace corrml
