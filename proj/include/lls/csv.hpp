#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace lls {

// 17 significant digits, '.' decimal point, no locale involvement. Enough to
// round-trip any double, so equal values always print identically.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace lls
