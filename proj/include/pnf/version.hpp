#pragma once

namespace pnf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pnf
