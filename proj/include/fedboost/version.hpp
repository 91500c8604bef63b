#pragma once

namespace fedboost {

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace fedboost
