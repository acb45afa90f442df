#pragma once

namespace fidkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fidkit
