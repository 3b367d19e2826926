#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "common.hpp"
#include "contention.hpp"
#include "maxmin_oracle.hpp"

using namespace tiersim;
using maxmin_oracle::build_pools;
using maxmin_oracle::is_maxmin;

namespace {

std::optional<std::vector<double>> oracle_rates(const std::vector<Flow>& flows,
                                                const std::vector<Link>& links) {
    return maxmin_oracle::rates(flows, links);
}

Flow mk(const std::string& id, std::vector<std::string> links, double demand = 1e9) {
    Flow f;
    f.id = id;
    for (auto& l : links) f.path.push_back({l, Direction::ToHost});
    f.demand = demand;
    return f;
}

}  // namespace

TEST_CASE("two flows on one shared link split evenly") {
    std::vector<Link> links = {{"L1", 10e9, {1.0}}};
    std::vector<Flow> flows = {mk("a", {"L1"}), mk("b", {"L1"})};
    auto rates = maxmin_rates(flows, links);
    CHECK(rates.at("a") == doctest::Approx(5e9));
    CHECK(rates.at("b") == doctest::Approx(5e9));
}

TEST_CASE("three flows, two links: classic progressive-filling result") {
    std::vector<Link> links = {{"L1", 10.0, {1.0}}, {"L2", 8.0, {1.0}}};
    std::vector<Flow> flows = {mk("f1", {"L1"}), mk("f2", {"L1", "L2"}), mk("f3", {"L2"})};
    auto rates = maxmin_rates(flows, links);
    CHECK(rates.at("f1") == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(rates.at("f2") == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rates.at("f3") == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("two GPU reads of one AIC collapse to the degraded aggregate") {
    std::vector<Link> links = {{"aic", 64e9, {1.0, 0.4194304}},
                               {"g0", 64e9, {1.0}},
                               {"g1", 64e9, {1.0}}};
    std::vector<Flow> flows;
    Flow f0{"f0", {{"aic", Direction::ToHost}, {"g0", Direction::FromHost}}, 1e9};
    Flow f1{"f1", {{"aic", Direction::ToHost}, {"g1", Direction::FromHost}}, 1e9};
    flows = {f0, f1};
    auto rates = maxmin_rates(flows, links);
    double aggregate = rates.at("f0") + rates.at("f1");
    CHECK(aggregate == doctest::Approx(26.8435456e9).epsilon(1e-9));  // 25 GiB/s
}

TEST_CASE("direction pools are independent (full duplex)") {
    std::vector<Link> links = {{"L", 10e9, {1.0}}};
    Flow up{"up", {{"L", Direction::ToHost}}, 1e9};
    Flow down{"down", {{"L", Direction::FromHost}}, 1e9};
    auto rates = maxmin_rates({up, down}, links);
    CHECK(rates.at("up") == doctest::Approx(10e9));
    CHECK(rates.at("down") == doctest::Approx(10e9));
}

TEST_CASE("unknown link throws") {
    std::vector<Link> links = {{"L1", 10e9, {1.0}}};
    CHECK_THROWS_AS(maxmin_rates({mk("f", {"bogus"})}, links), UnknownLink);
}

TEST_CASE("advance: single flow") {
    std::vector<Flow> flows = {mk("f", {"L1"}, 64e9)};
    RateAssignment rates{{"f", 64e9}};
    auto r = advance(flows, rates);
    CHECK(r.elapsed == doctest::Approx(1.0));
    REQUIRE(r.completed.size() == 1);
    CHECK(r.completed[0] == "f");
}

TEST_CASE("advance: equal flows complete together") {
    std::vector<Flow> flows = {mk("a", {"L1"}, 5e9), mk("b", {"L1"}, 5e9)};
    RateAssignment rates{{"a", 5e9}, {"b", 5e9}};
    auto r = advance(flows, rates);
    CHECK(r.completed.size() == 2);
}

TEST_CASE("advance: partial progress leaves the slower flow running") {
    std::vector<Flow> flows = {mk("f1", {"L1"}, 6e9), mk("f2", {"L2"}, 8e9)};
    RateAssignment rates{{"f1", 6e9}, {"f2", 4e9}};
    auto r = advance(flows, rates);
    CHECK(r.elapsed == doctest::Approx(1.0));
    REQUIRE(r.completed == std::vector<std::string>{"f1"});
    CHECK(flows[1].demand == doctest::Approx(4e9));
}

TEST_CASE("advance: zero rate is a deadlock error") {
    std::vector<Flow> flows = {mk("f", {"L1"}, 1e9)};
    RateAssignment rates{{"f", 0.0}};
    CHECK_THROWS(advance(flows, rates));
}

TEST_CASE("fairness: identical paths get identical rates") {
    std::vector<Link> links = {{"L1", 9e9, {1.0, 0.8}}, {"L2", 7e9, {1.0}}};
    std::vector<Flow> flows = {mk("a", {"L1", "L2"}), mk("b", {"L1", "L2"}), mk("c", {"L1"})};
    auto rates = maxmin_rates(flows, links);
    CHECK(rates.at("a") == doctest::Approx(rates.at("b")).epsilon(1e-12));
}

TEST_CASE("work conservation and pareto efficiency on random shapes") {
    std::vector<Link> links = {{"L1", 10e9, {1.0}}, {"L2", 8e9, {1.0}}, {"L3", 3e9, {1.0, 0.9}}};
    std::vector<std::vector<std::string>> paths = {
        {"L1"}, {"L2"}, {"L3"}, {"L1", "L2"}, {"L1", "L3"}, {"L2", "L3"}, {"L1", "L2", "L3"}};
    for (std::size_t a = 0; a < paths.size(); ++a) {
        for (std::size_t b = a; b < paths.size(); ++b) {
            for (std::size_t c = b; c < paths.size(); ++c) {
                std::vector<Flow> flows = {mk("fa", paths[a]), mk("fb", paths[b]),
                                           mk("fc", paths[c])};
                auto rates = maxmin_rates(flows, links);
                auto pools = build_pools(flows, links);
                std::vector<double> rate = {rates.at("fa"), rates.at("fb"), rates.at("fc")};
                CHECK(is_maxmin(rate, pools, flows));
            }
        }
    }
}

TEST_CASE("solver matches the saturation-order oracle") {
    std::vector<Link> links = {{"L1", 10e9, {1.0}}, {"L2", 8e9, {1.0, 0.7}}, {"L3", 3e9, {1.0}}};
    std::vector<std::vector<std::string>> paths = {
        {"L1"}, {"L2"}, {"L3"}, {"L1", "L2"}, {"L2", "L3"}, {"L1", "L3"}, {"L1", "L2", "L3"}};
    int checked = 0;
    for (std::size_t a = 0; a < paths.size(); ++a) {
        for (std::size_t b = a; b < paths.size(); ++b) {
            std::vector<Flow> flows = {mk("f0", paths[a]), mk("f1", paths[b])};
            auto rates = maxmin_rates(flows, links);
            auto oracle = oracle_rates(flows, links);
            REQUIRE(oracle.has_value());
            for (std::size_t i = 0; i < flows.size(); ++i) {
                CHECK(rates.at(flows[i].id) ==
                      doctest::Approx((*oracle)[i]).epsilon(1e-9));
            }
            ++checked;
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("splitting a flow in half leaves total transfer time unchanged (eta == 1)") {
    // Holds whenever the flow set shares one bottleneck (work conservation);
    // with asymmetric cross-traffic max-min genuinely favors the split pair,
    // so those sets are out of scope for this property.
    std::vector<Link> links = {{"L1", 10e9, {1.0}}, {"L2", 8e9, {1.0}}};
    auto total_time = [&](std::vector<Flow> flows) {
        double t = 0;
        while (!flows.empty()) {
            auto rates = maxmin_rates(flows, links);
            auto r = advance(flows, rates);
            t += r.elapsed;
            flows.erase(std::remove_if(flows.begin(), flows.end(),
                                       [](const Flow& f) { return f.demand <= 0; }),
                        flows.end());
        }
        return t;
    };

    // solo flow
    std::vector<Flow> solo = {mk("x", {"L1", "L2"}, 8e9)};
    std::vector<Flow> solo_split = {mk("x1", {"L1", "L2"}, 4e9), mk("x2", {"L1", "L2"}, 4e9)};
    CHECK(total_time(solo) == doctest::Approx(total_time(solo_split)).epsilon(1e-9));

    // several flows on one shared path
    std::vector<Flow> same = {mk("a", {"L1", "L2"}, 8e9), mk("b", {"L1", "L2"}, 6e9)};
    std::vector<Flow> same_split = {mk("a1", {"L1", "L2"}, 4e9), mk("a2", {"L1", "L2"}, 4e9),
                                    mk("b", {"L1", "L2"}, 6e9)};
    CHECK(total_time(same) == doctest::Approx(total_time(same_split)).epsilon(1e-9));
}
