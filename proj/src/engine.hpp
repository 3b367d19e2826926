#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "placement.hpp"
#include "topology.hpp"
#include "workload.hpp"

namespace tiersim {

enum class OverlapModel { None, DoubleBuffered };

enum class TaskKind { H2dParam, D2hActivation, H2dActivation, D2hGrad, GpuCompute, CpuOptimizer };

// One transfer task materializes as one concurrent flow per stripe-node.
struct FlowShare {
    std::string node;
    double bytes;
};

struct TransferTask {
    TaskKind kind;
    std::uint32_t gpu = 0;
    std::uint64_t block = 0;
    std::vector<FlowShare> flows;
};

struct BlockTasks {
    std::uint64_t block = 0;
    std::vector<TransferTask> before_compute;  // loads the block needs
    double compute_s = 0.0;
    std::vector<TransferTask> after_compute;   // offloads the block produces
};

struct GpuSchedule {
    std::vector<BlockTasks> fwd;  // block order 0..L-1
    std::vector<BlockTasks> bwd;  // reverse block order
};

struct PhaseSchedule {
    std::vector<GpuSchedule> gpus;
    double optimizer_elements = 0.0;
};

PhaseSchedule build_schedule(const ModelSpec& model, const TrainingConfig& train,
                             const PlacementPlan& plan, const Topology& topo);

// Per-block GPU compute cost. Backward includes the activation recompute.
double gpu_fwd_block_seconds(const ModelSpec& model, const TrainingConfig& train,
                             const GpuDevice& gpu);
double gpu_bwd_block_seconds(const ModelSpec& model, const TrainingConfig& train,
                             const GpuDevice& gpu);

// One memory tier's slice of the CpuCompute bytes.
struct TierShare {
    std::string node;
    std::uint64_t bytes = 0;
    double stream_bandwidth = 0.0;
    double load_latency_ns = 0.0;
};

// Streaming-bound optimizer model: 28 bytes of traffic per element (read
// fp32 P, G and the two optimizer states; write back P and the states), less
// what stays resident in the last-level cache. Tiers drain sequentially
// unless the plan marked them for parallel striped access.
double optimizer_step_time(double elements, const std::vector<TierShare>& tiers,
                           bool parallel_striped, const CpuModel& cpu);

std::vector<TierShare> cpu_compute_tiers(const PlacementPlan& plan, const Topology& topo);

struct IterationReport {
    double fwd_s = 0.0;
    double bwd_s = 0.0;
    double step_s = 0.0;
    double total_s = 0.0;
    double throughput = 0.0;  // tokens/s = Ng*B*C / total_s
    std::map<std::string, std::uint64_t> per_node_peak;
    // phase name ("fwd"/"bwd") -> link id -> seconds with at least one active flow
    std::map<std::string, std::map<std::string, double>> per_phase_per_link_busy;
};

IterationReport simulate(const ModelSpec& model, const TrainingConfig& train,
                         const PlacementPlan& plan, const Topology& topo, OverlapModel overlap,
                         const CpuModel& cpu);

}  // namespace tiersim
