#include "topology.hpp"

#include <algorithm>
#include <set>

#include "calibration.hpp"
#include "common.hpp"

namespace tiersim {

double Link::eta(std::size_t concurrent_flows) const {
    if (multiflow_efficiency.empty()) return 1.0;
    if (concurrent_flows == 0) return 1.0;
    std::size_t idx = std::min(concurrent_flows, multiflow_efficiency.size()) - 1;
    return multiflow_efficiency[idx];
}

const MemoryNode* Topology::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

const Link* Topology::find_link(const std::string& id) const {
    for (const auto& l : links)
        if (l.id == id) return &l;
    return nullptr;
}

const MemoryNode& Topology::local_dram() const {
    for (const auto& n : nodes)
        if (n.kind == NodeKind::LocalDram) return n;
    throw ValidationError("topology has no LocalDram node");
}

std::vector<const MemoryNode*> Topology::aics() const {
    std::vector<const MemoryNode*> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::CxlAic) out.push_back(&n);
    return out;
}

std::uint64_t Topology::usable_dram() const {
    const auto& dram = local_dram();
    if (dram_cap_override) return std::min(dram.capacity, *dram_cap_override);
    return dram.capacity;
}

std::string to_string(const Violation& v) { return v.entity + ": " + v.rule; }

std::vector<Violation> validate(const Topology& topo) {
    std::vector<Violation> out;
    auto add = [&](const std::string& entity, const std::string& rule) {
        out.push_back({entity, rule});
    };

    std::set<std::string> ids;
    auto check_unique = [&](const std::string& id, const char* what) {
        if (!ids.insert(id).second) add(id, std::string(what) + " id not unique");
    };

    int dram_count = 0;
    for (const auto& n : topo.nodes) {
        check_unique(n.id, "node");
        if (n.capacity == 0) add(n.id, "capacity must be > 0");
        if (n.cpu_stream_bandwidth <= 0) add(n.id, "cpu_stream_bandwidth must be > 0");
        if (n.kind == NodeKind::LocalDram) {
            ++dram_count;
            if (n.load_latency_ns < 80.0 || n.load_latency_ns > 140.0)
                add(n.id, "LocalDram load_latency must lie in [80, 140] ns");
            if (n.link) add(n.id, "LocalDram node must not reference a link");
        } else {
            if (n.load_latency_ns < 170.0 || n.load_latency_ns > 250.0)
                add(n.id, "CxlAic load_latency must lie in [170, 250] ns");
            if (!n.link) {
                add(n.id, "CxlAic node requires a link");
            } else if (!topo.find_link(*n.link)) {
                add(n.id, "references unknown link '" + *n.link + "'");
            }
        }
    }
    if (dram_count != 1) add("topology", "exactly one LocalDram node required");

    for (const auto& g : topo.gpus) {
        check_unique(g.id, "gpu");
        if (g.compute_rate <= 0) add(g.id, "compute_rate must be > 0");
        if (g.recompute_factor < 1.0) add(g.id, "recompute_factor must be >= 1");
        if (!topo.find_link(g.link)) add(g.id, "references unknown link '" + g.link + "'");
    }

    for (const auto& l : topo.links) {
        check_unique(l.id, "link");
        if (l.per_direction_capacity <= 0) add(l.id, "per_direction_capacity must be > 0");
        if (l.multiflow_efficiency.empty()) {
            add(l.id, "multiflow_efficiency table must not be empty");
            continue;
        }
        if (l.multiflow_efficiency.front() != 1.0) add(l.id, "eta(1) = 1 required");
        double prev = l.multiflow_efficiency.front();
        for (double e : l.multiflow_efficiency) {
            if (e <= 0.0 || e > 1.0) {
                add(l.id, "eta values must lie in (0, 1]");
                break;
            }
            if (e > prev) {
                add(l.id, "eta must be non-increasing in flow count");
                break;
            }
            prev = e;
        }
    }

    if (topo.dram_cap_override) {
        if (dram_count == 1 && *topo.dram_cap_override > topo.local_dram().capacity)
            add("topology", "dram_cap_override exceeds LocalDram capacity");
    }

    return out;
}

Topology preset(TopologyPreset which) {
    const CalibParams& cal = default_params();
    Topology topo;

    MemoryNode dram;
    dram.id = "dram0";
    dram.kind = NodeKind::LocalDram;
    dram.capacity = 512'000'000'000ull;
    dram.load_latency_ns = cal.dram_load_latency_ns;
    dram.cpu_stream_bandwidth = cal.dram_stream_bandwidth;
    topo.nodes.push_back(dram);

    auto add_aic = [&](int idx, std::uint64_t capacity) {
        Link link;
        link.id = "aic" + std::to_string(idx) + "_link";
        link.per_direction_capacity = cal.link_rate;
        link.multiflow_efficiency = cal.aic_eta;
        topo.links.push_back(link);

        MemoryNode aic;
        aic.id = "aic" + std::to_string(idx);
        aic.kind = NodeKind::CxlAic;
        aic.capacity = capacity;
        aic.load_latency_ns = cal.cxl_load_latency_ns;
        aic.cpu_stream_bandwidth = cal.cxl_stream_bandwidth;
        aic.link = link.id;
        topo.nodes.push_back(aic);
    };

    if (which == TopologyPreset::ConfigA) {
        add_aic(0, 512'000'000'000ull);
    } else {
        add_aic(0, 256'000'000'000ull);
        add_aic(1, 256'000'000'000ull);
    }

    for (int g = 0; g < 2; ++g) {
        Link link;
        link.id = "gpu" + std::to_string(g) + "_link";
        link.per_direction_capacity = cal.link_rate;
        link.multiflow_efficiency = {1.0};
        topo.links.push_back(link);

        GpuDevice gpu;
        gpu.id = "gpu" + std::to_string(g);
        gpu.link = link.id;
        gpu.compute_rate = cal.compute_rate;
        gpu.recompute_factor = cal.recompute_factor;
        topo.gpus.push_back(gpu);
    }

    return topo;
}

std::optional<TopologyPreset> preset_from_name(const std::string& name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "configa" || lower == "config-a" || lower == "config_a" || lower == "a")
        return TopologyPreset::ConfigA;
    if (lower == "configb" || lower == "config-b" || lower == "config_b" || lower == "b")
        return TopologyPreset::ConfigB;
    return std::nullopt;
}

}  // namespace tiersim
