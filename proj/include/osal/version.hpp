#pragma once

namespace osal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace osal
