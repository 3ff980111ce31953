#pragma once

namespace pabc {
inline constexpr const char* kVersion = "0.1.0";
}
