#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace obatalab {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

}  // namespace obatalab
