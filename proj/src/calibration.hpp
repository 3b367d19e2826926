#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tiersim {

// CPU-side cost model for the optimizer step. Streaming bandwidth per tier
// comes from the topology nodes; these are the CPU-global knobs.
struct CpuModel {
    double compute_elems_per_s = 0.0;        // SIMD optimizer throughput ceiling
    double cache_bytes = 0.0;                // LLC working-set capacity
    double aggregate_stream_bandwidth = 0.0; // cap on summed tier bandwidth when striped
};

// Every free parameter of the model in one place. Topology presets and the
// scenario loader draw their defaults from here.
struct CalibParams {
    double dram_load_latency_ns;
    double cxl_load_latency_ns;
    double link_rate;                 // per-direction PCIe capacity, bytes/s
    std::vector<double> aic_eta;      // multiflow efficiency table for AIC links
    double dram_stream_bandwidth;     // CPU streaming to local DRAM, bytes/s
    double cxl_stream_bandwidth;      // CPU streaming to one AIC, bytes/s
    double compute_elems_per_s;
    double cpu_cache_bytes;
    double cpu_aggregate_stream_bandwidth;
    double compute_rate;              // GPU tokens/s, a per-scenario knob
    double recompute_factor;
    std::uint64_t interleave_granularity;

    CpuModel cpu_model() const;
};

const CalibParams& default_params();

// One calibration target: an observable evaluated by the model versus the
// value it should reproduce.
struct Anchor {
    std::string name;
    // "step_time_ratio": all-CXL vs all-DRAM optimizer step time at `elements`.
    // "aic_aggregate":   aggregate bytes/s of `flows` concurrent reads of one AIC.
    // "transfer_parity": single-flow CXL->GPU rate over DRAM->GPU rate.
    std::string kind;
    double elements = 0.0;
    int flows = 1;
    double target = 0.0;
    double tolerance = 0.0;  // relative
};

struct AnchorResult {
    Anchor anchor;
    double observed = 0.0;
    double residual = 0.0;  // |observed - target| / |target|
    bool within_tolerance = false;
};

struct FitResult {
    CalibParams params;
    std::vector<AnchorResult> residuals;
    double max_residual = 0.0;
    bool no_improvement = false;  // tolerance unreachable on the grid
    int passes = 0;
};

double evaluate_anchor(const Anchor& anchor, const CalibParams& params);

// Deterministic coordinate-descent over fixed grids, minimizing the maximum
// relative residual. Free parameter names: dram_stream_bandwidth,
// cxl_stream_bandwidth, compute_elems_per_s, cache_bytes, eta2, compute_rate.
FitResult fit(const std::vector<Anchor>& anchors, const std::vector<std::string>& free_params,
              const CalibParams& start, double grid_resolution = 0.01);

}  // namespace tiersim
