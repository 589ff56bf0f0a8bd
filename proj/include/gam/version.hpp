#pragma once

namespace gam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gam
