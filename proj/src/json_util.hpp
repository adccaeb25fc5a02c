#pragma once

#include <charconv>
#include <string>

#include <json.hpp>

namespace qfst::detail {

/// Rounds to 12 significant digits so that nlohmann's shortest-round-trip
/// dump prints exactly the 12-digit decimal form.
inline double sig12(double value) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
    if (ec != std::errc()) return value;
    double rounded = value;
    std::from_chars(buf, ptr, rounded);
    return rounded;
}

}  // namespace qfst::detail
