#pragma once

namespace releq {

inline constexpr const char* kVersion = "0.1.0";

} // namespace releq
