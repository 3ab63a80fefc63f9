#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace nshift {

/// 17 significant digits; NaN as "nan", infinities as "inf"/"-inf".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace nshift
