#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tiersim {

enum class NodeKind { LocalDram, CxlAic };

// A memory tier visible to the CPU. CXL add-in cards sit behind a PCIe link;
// local DRAM is reached through the CPU's own memory controllers and is
// modeled as contention-free.
struct MemoryNode {
    std::string id;
    NodeKind kind = NodeKind::LocalDram;
    std::uint64_t capacity = 0;            // bytes
    double load_latency_ns = 0.0;          // scalar access latency
    double cpu_stream_bandwidth = 0.0;     // sustainable CPU streaming rate, bytes/s
    std::optional<std::string> link;       // present iff kind == CxlAic
};

struct GpuDevice {
    std::string id;
    std::string link;
    double compute_rate = 0.0;      // tokens/s for block compute
    double recompute_factor = 1.0;  // backward recompute multiplier, >= 1
};

struct Link {
    std::string id;
    double per_direction_capacity = 0.0;  // bytes/s, full duplex
    // multiflow_efficiency[n-1] = eta(n); values beyond the table clamp to the
    // last entry. eta(1) must be 1 and the table must be non-increasing.
    std::vector<double> multiflow_efficiency = {1.0};

    double eta(std::size_t concurrent_flows) const;
};

struct Topology {
    std::vector<MemoryNode> nodes;
    std::vector<GpuDevice> gpus;
    std::vector<Link> links;
    std::optional<std::uint64_t> dram_cap_override;  // restricts usable DRAM

    const MemoryNode* find_node(const std::string& id) const;
    const Link* find_link(const std::string& id) const;
    const MemoryNode& local_dram() const;           // throws if absent
    std::vector<const MemoryNode*> aics() const;    // in declaration order
    std::uint64_t usable_dram() const;
};

struct Violation {
    std::string entity;
    std::string rule;
};

std::string to_string(const Violation& v);

// Empty result iff every type invariant holds. Violations are data, not errors.
std::vector<Violation> validate(const Topology& topo);

enum class TopologyPreset { ConfigA, ConfigB };

// ConfigA: 512 GB DRAM + one 512 GB AIC. ConfigB: 512 GB DRAM + two 256 GB
// AICs. Both have two GPUs on dedicated 64e9 B/s per-direction links.
Topology preset(TopologyPreset which);

std::optional<TopologyPreset> preset_from_name(const std::string& name);

}  // namespace tiersim
