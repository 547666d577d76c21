#pragma once

namespace tsregret {

inline constexpr const char* version = "0.1.0";

}  // namespace tsregret
