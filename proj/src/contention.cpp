#include "contention.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#include "common.hpp"

namespace tiersim {

namespace {

using LinkDir = std::pair<const Link*, Direction>;

struct LinkDirState {
    const Link* link;
    Direction dir;
    double cap_eff;
    double remaining;
    std::vector<std::size_t> flows;  // indexes into the flow list
    std::size_t unfrozen = 0;
};

}  // namespace

RateAssignment maxmin_rates(const std::vector<Flow>& flows, const std::vector<Link>& links) {
    std::map<std::string, const Link*> by_id;
    for (const auto& l : links) by_id[l.id] = &l;

    // Group flows per (link, direction); n for eta is the total crossing count.
    std::map<std::pair<std::string, int>, LinkDirState> states;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        if (flows[i].path.empty()) throw ValidationError("flow '" + flows[i].id + "' has empty path");
        for (const auto& hop : flows[i].path) {
            auto it = by_id.find(hop.link);
            if (it == by_id.end())
                throw UnknownLink("flow '" + flows[i].id + "' crosses unknown link '" + hop.link + "'");
            auto key = std::make_pair(hop.link, static_cast<int>(hop.dir));
            auto& st = states[key];
            st.link = it->second;
            st.dir = hop.dir;
            st.flows.push_back(i);
        }
    }
    for (auto& [key, st] : states) {
        st.cap_eff = st.link->per_direction_capacity * st.link->eta(st.flows.size());
        st.remaining = st.cap_eff;
        st.unfrozen = st.flows.size();
    }

    std::vector<double> rate(flows.size(), 0.0);
    std::vector<bool> frozen(flows.size(), false);
    std::size_t frozen_count = 0;

    // Progressive filling: raise all unfrozen flows uniformly until some
    // link/direction saturates, freeze its flows, repeat.
    while (frozen_count < flows.size()) {
        double inc = std::numeric_limits<double>::infinity();
        for (const auto& [key, st] : states) {
            if (st.unfrozen == 0) continue;
            inc = std::min(inc, st.remaining / static_cast<double>(st.unfrozen));
        }
        assert(inc < std::numeric_limits<double>::infinity());

        for (std::size_t i = 0; i < flows.size(); ++i)
            if (!frozen[i]) rate[i] += inc;
        for (auto& [key, st] : states)
            st.remaining -= inc * static_cast<double>(st.unfrozen);

        // Freeze flows crossing saturated links.
        for (auto& [key, st] : states) {
            if (st.unfrozen == 0) continue;
            if (st.remaining <= st.cap_eff * 1e-12) {
                for (std::size_t i : st.flows) {
                    if (frozen[i]) continue;
                    frozen[i] = true;
                    ++frozen_count;
                }
            }
        }
        // Recount unfrozen per link.
        for (auto& [key, st] : states) {
            std::size_t n = 0;
            for (std::size_t i : st.flows)
                if (!frozen[i]) ++n;
            st.unfrozen = n;
        }
    }

    RateAssignment out;
    for (std::size_t i = 0; i < flows.size(); ++i) out[flows[i].id] = rate[i];
    return out;
}

AdvanceResult advance(std::vector<Flow>& flows, const RateAssignment& rates) {
    AdvanceResult result;
    if (flows.empty()) return result;

    double elapsed = std::numeric_limits<double>::infinity();
    for (const auto& f : flows) {
        auto it = rates.find(f.id);
        double r = it == rates.end() ? 0.0 : it->second;
        if (r <= 0.0)
            throw SimError("zero-rate deadlock: flow '" + f.id + "' cannot make progress");
        elapsed = std::min(elapsed, f.demand / r);
    }
    result.elapsed = elapsed;
    for (auto& f : flows) {
        double r = rates.at(f.id);
        f.demand -= r * elapsed;
        if (f.demand <= 1.0) {
            f.demand = 0.0;
            result.completed.push_back(f.id);
        }
    }
    return result;
}

}  // namespace tiersim
