#pragma once

namespace rodd {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace rodd
