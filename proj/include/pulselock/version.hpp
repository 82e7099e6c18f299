#pragma once

namespace pulselock {

inline constexpr const char* version = "0.1.0";

}  // namespace pulselock
