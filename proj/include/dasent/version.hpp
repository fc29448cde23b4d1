#pragma once

namespace dasent {
inline constexpr const char* kVersion = "1.0.0";
}
