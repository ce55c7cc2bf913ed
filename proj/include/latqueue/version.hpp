#pragma once

namespace latqueue {
inline constexpr const char* kVersion = "0.1.0";
}
