#pragma once

namespace dmsrec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dmsrec
