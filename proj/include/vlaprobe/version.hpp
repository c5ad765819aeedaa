#pragma once

namespace vlaprobe {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace vlaprobe
