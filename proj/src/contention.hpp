#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "topology.hpp"

namespace tiersim {

enum class Direction { ToHost, FromHost };

struct Hop {
    std::string link;
    Direction dir;
};

struct Flow {
    std::string id;
    std::vector<Hop> path;  // ordered, non-empty
    double demand = 0.0;    // bytes remaining
};

using RateAssignment = std::map<std::string, double>;  // flow id -> bytes/s

// Max-min fair rates by progressive filling. Per (link, direction) the
// effective capacity is per_direction_capacity * eta(n), with n the number of
// flows currently crossing that link/direction. Throws UnknownLink.
RateAssignment maxmin_rates(const std::vector<Flow>& flows, const std::vector<Link>& links);

struct AdvanceResult {
    double elapsed = 0.0;
    std::vector<std::string> completed;  // demand reached zero (1-byte tolerance)
};

// Runs all flows at the given rates until the first completion; decrements
// demands in place. Throws if any flow has zero rate.
AdvanceResult advance(std::vector<Flow>& flows, const RateAssignment& rates);

}  // namespace tiersim
