#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topology.hpp"
#include "workload.hpp"

namespace tiersim {

enum class Policy { DramOnly, NaiveInterleave, CxlAware, CxlAwareStriped };

std::string to_string(Policy p);
std::optional<Policy> policy_from_name(const std::string& name);

// A contiguous-by-accounting share of one component on one node. `gpu` tags
// per-GPU shares (activations); shared components leave it empty.
struct Stripe {
    std::string node;
    std::uint64_t bytes = 0;
    std::uint64_t granularity = 0;
    std::optional<std::uint32_t> gpu;
};

struct PlacementPlan {
    Policy policy = Policy::DramOnly;
    std::map<Component, std::vector<Stripe>> stripes;
    // gpu id -> AIC ids this GPU's transfer data lives on.
    std::map<std::string, std::vector<std::string>> per_gpu_affinity;
    // True when CpuCompute overflow was partitioned bandwidth-proportionally
    // across tiers for parallel access during the optimizer step.
    bool cpu_parallel_striped = false;
    std::vector<std::string> spill_notes;
    std::uint64_t usable_dram = 0;
    std::uint64_t granularity = 0;

    std::map<std::string, std::uint64_t> per_node_bytes() const;
    std::uint64_t component_total(Component c) const;
};

struct PlacementOptions {
    std::uint64_t granularity = 4096;
    // DRAM-eviction order when CpuCompute exceeds usable DRAM; first spills
    // first. Kept configurable because no measurement pins it down.
    std::vector<Component> spill_order = {Component::OptimStates, Component::GradsFp32,
                                          Component::ParamsFp32};
};

// Produces a feasible plan or throws InfeasiblePlacement naming the first
// component that cannot be placed. Deterministic.
PlacementPlan plan(Policy policy, const Topology& topo, const ModelSpec& model,
                   const TrainingConfig& train, const PlacementOptions& opts = {});

// Verifies conservation (stripe sums equal component bytes) and per-node
// capacity. Empty list iff the plan is feasible.
std::vector<Violation> check(const PlacementPlan& plan, const Topology& topo,
                             const ModelSpec& model, const TrainingConfig& train);

std::string describe(const PlacementPlan& plan);

}  // namespace tiersim
