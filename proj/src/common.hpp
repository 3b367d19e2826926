#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tiersim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : SimError {
    using SimError::SimError;
};

struct ValidationError : SimError {
    using SimError::SimError;
};

// Byte totals exceed what the counter can hold; reported, never wrapped.
struct OverflowError : SimError {
    using SimError::SimError;
};

struct UnknownLink : SimError {
    using SimError::SimError;
};

// Thrown by the planner when a component cannot be placed anywhere.
struct InfeasiblePlacement : SimError {
    std::string component;
    InfeasiblePlacement(std::string comp, const std::string& msg)
        : SimError(msg), component(std::move(comp)) {}
};

// "512GB", "128GiB", "4096" -> bytes. Decimal and binary suffixes.
std::uint64_t parse_bytes(const std::string& text);

// "64GB/s", "200e9", 64000000000 -> bytes/second.
double parse_rate(const std::string& text);

std::string format_bytes(std::uint64_t bytes);

}  // namespace tiersim
