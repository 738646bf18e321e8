#pragma once

#include <charconv>
#include <string>

namespace riskcert {

// Shortest decimal that round-trips the exact double.
inline std::string format_double(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace riskcert
