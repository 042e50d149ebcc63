#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace mbrf {

/// Shortest decimal text that reads back to the identical double.
inline std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::vector<std::string> split_csv_line(std::string_view line);

double parse_double(std::string_view text);

} // namespace mbrf
