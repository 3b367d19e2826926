#include "common.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace tiersim {

namespace {

struct Suffix {
    const char* name;
    double factor;
};

// Binary suffixes first so "GiB" is not matched by "GB"'s prefix logic.
constexpr std::array<Suffix, 10> kSuffixes = {{
    {"KiB", 1024.0},
    {"MiB", 1024.0 * 1024},
    {"GiB", 1024.0 * 1024 * 1024},
    {"TiB", 1024.0 * 1024 * 1024 * 1024},
    {"KB", 1e3},
    {"MB", 1e6},
    {"GB", 1e9},
    {"TB", 1e12},
    {"B", 1.0},
    {"", 1.0},
}};

double parse_with_suffix(const std::string& text, const char* what) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string(what) + ": cannot parse '" + text + "'");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::string suffix = text.substr(pos);
    for (const auto& s : kSuffixes) {
        if (suffix == s.name) return value * s.factor;
    }
    throw ParseError(std::string(what) + ": unknown unit suffix '" + suffix + "' in '" + text + "'");
}

}  // namespace

std::uint64_t parse_bytes(const std::string& text) {
    double v = parse_with_suffix(text, "byte size");
    if (v < 0 || v > 1.8e19) throw ParseError("byte size out of range: '" + text + "'");
    return static_cast<std::uint64_t>(std::llround(v));
}

double parse_rate(const std::string& text) {
    std::string t = text;
    if (t.size() >= 2 && t.substr(t.size() - 2) == "/s") t = t.substr(0, t.size() - 2);
    return parse_with_suffix(t, "rate");
}

std::string format_bytes(std::uint64_t bytes) {
    char buf[64];
    if (bytes >= 1000ull * 1000 * 1000) {
        std::snprintf(buf, sizeof(buf), "%.3f GB", static_cast<double>(bytes) / 1e9);
    } else if (bytes >= 1000ull * 1000) {
        std::snprintf(buf, sizeof(buf), "%.3f MB", static_cast<double>(bytes) / 1e6);
    } else {
        std::snprintf(buf, sizeof(buf), "%llu B", static_cast<unsigned long long>(bytes));
    }
    return buf;
}

}  // namespace tiersim
