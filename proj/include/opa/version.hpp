#pragma once

namespace opa {

inline constexpr const char* version = "0.1.0";

}  // namespace opa
