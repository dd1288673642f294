#pragma once

namespace tsslab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tsslab
