#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "engine.hpp"
#include "placement.hpp"
#include "topology.hpp"
#include "workload.hpp"

namespace tiersim {

// One policy column of a sweep. A policy may restrict usable DRAM for its own
// runs (the baseline typically keeps the full DIMM capacity while CXL
// configurations cap it).
struct PolicyEntry {
    Policy policy = Policy::DramOnly;
    bool baseline = false;
    std::optional<std::uint64_t> dram_cap_override;
};

struct ScenarioConfig {
    ModelSpec model;
    TrainingConfig train;
    Topology topology;
    std::string topology_id;  // preset name or "inline"
    std::vector<PolicyEntry> policies;
    OverlapModel overlap = OverlapModel::DoubleBuffered;
    CalibParams calib;  // defaults with config overrides applied
    PlacementOptions placement;
    std::vector<std::uint64_t> sweep_context;
    std::vector<std::uint64_t> sweep_batch;
    std::vector<std::uint32_t> sweep_gpus;
};

// Parses and validates a scenario config. Throws ParseError/ValidationError
// with the offending field spelled out.
ScenarioConfig load_config(const std::string& json_text);
ScenarioConfig load_config_file(const std::string& path);

std::size_t sweep_size(const ScenarioConfig& config);

struct RunRecord {
    std::string model_name;
    std::uint64_t total_params = 0;
    std::uint64_t num_blocks = 0;
    std::uint64_t hidden_size = 0;
    std::uint64_t context = 0;
    std::uint64_t batch = 0;
    std::uint32_t num_gpus = 0;
    std::string topology_id;
    std::string policy;
    bool baseline = false;
    bool feasible = false;
    std::string violation;  // set when infeasible
    IterationReport report;
    FootprintReport footprint;
    std::map<std::string, std::uint64_t> node_bytes;
    bool cpu_parallel_striped = false;
    std::vector<std::string> spill_notes;
    // Throughput relative to the baseline policy at the same coordinates;
    // negative when no feasible baseline exists.
    double normalized = -1.0;
};

// One record per sweep point x policy, ordered lexicographically by
// (context, batch, num_gpus, policy position). Infeasible points are records,
// not failures.
std::vector<RunRecord> run(const ScenarioConfig& config);

enum class ReportFormat { Csv, JsonLines, Table };
std::optional<ReportFormat> format_from_name(const std::string& name);

std::string render(const std::vector<RunRecord>& records, ReportFormat format);

// Text dump of the placement plans for the base scenario point (no simulation).
std::string plan_text(const ScenarioConfig& config);

std::string presets_text();

// Parses an anchors file, runs the fit, returns a JSON report.
std::string calibrate_text(const ScenarioConfig& config, const std::string& anchors_json);

}  // namespace tiersim
