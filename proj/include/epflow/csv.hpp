#pragma once

#include <cstdio>
#include <string>

namespace epflow::csv {

/// 17 significant digits, enough for a lossless round-trip of a double.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace epflow::csv
