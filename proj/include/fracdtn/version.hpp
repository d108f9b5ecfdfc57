#pragma once

namespace fracdtn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fracdtn
