#include "engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "contention.hpp"

namespace tiersim {

namespace {

constexpr double kOptimizerBytesPerElement = 28.0;  // 16 read + 12 written back

// Aggregates a component's stripes (optionally one GPU's share) into
// per-node byte totals.
std::map<std::string, std::uint64_t> stripe_nodes(const PlacementPlan& plan, Component c,
                                                  std::optional<std::uint32_t> gpu) {
    std::map<std::string, std::uint64_t> out;
    auto it = plan.stripes.find(c);
    if (it == plan.stripes.end()) return out;
    for (const auto& s : it->second) {
        if (gpu && s.gpu && *s.gpu != *gpu) continue;
        if (gpu && !s.gpu) continue;       // per-GPU lookup skips shared stripes
        if (!gpu && s.gpu) continue;       // shared lookup skips per-GPU stripes
        out[s.node] += s.bytes;
    }
    return out;
}

TransferTask make_task(TaskKind kind, std::uint32_t gpu, std::uint64_t block, double volume,
                       const std::map<std::string, std::uint64_t>& nodes) {
    TransferTask task{kind, gpu, block, {}};
    long double total = 0;
    for (const auto& [node, bytes] : nodes) total += static_cast<long double>(bytes);
    assert(total > 0);
    for (const auto& [node, bytes] : nodes) {
        double share = static_cast<double>(volume * (static_cast<long double>(bytes) / total));
        if (share > 0) task.flows.push_back({node, share});
    }
    return task;
}

}  // namespace

double gpu_fwd_block_seconds(const ModelSpec& model, const TrainingConfig& train,
                             const GpuDevice& gpu) {
    double tokens = static_cast<double>(train.batch) * static_cast<double>(train.context);
    return tokens / gpu.compute_rate / static_cast<double>(model.num_blocks);
}

double gpu_bwd_block_seconds(const ModelSpec& model, const TrainingConfig& train,
                             const GpuDevice& gpu) {
    return gpu.recompute_factor * gpu_fwd_block_seconds(model, train, gpu);
}

PhaseSchedule build_schedule(const ModelSpec& model, const TrainingConfig& train,
                             const PlacementPlan& plan, const Topology& topo) {
    if (train.num_gpus > topo.gpus.size())
        throw ValidationError("num_gpus exceeds GPUs present in topology");

    PerBlockVolumes vols = per_block_volumes(model, train);
    auto params_nodes = stripe_nodes(plan, Component::ParamsBf16, std::nullopt);
    auto grads_nodes = stripe_nodes(plan, Component::GradsBf16, std::nullopt);

    PhaseSchedule sched;
    sched.optimizer_elements = static_cast<double>(model.total_params);
    for (std::uint32_t g = 0; g < train.num_gpus; ++g) {
        auto act_nodes = stripe_nodes(plan, Component::Activations, g);
        const GpuDevice& gpu = topo.gpus[g];
        GpuSchedule gs;
        double fwd_c = gpu_fwd_block_seconds(model, train, gpu);
        double bwd_c = gpu_bwd_block_seconds(model, train, gpu);
        for (std::uint64_t b = 0; b < model.num_blocks; ++b) {
            double param_v = static_cast<double>(param_bytes_for_block(vols, b, model.num_blocks));
            double act_v = static_cast<double>(vols.activation_per_block_per_gpu);

            BlockTasks fwd;
            fwd.block = b;
            fwd.before_compute.push_back(make_task(TaskKind::H2dParam, g, b, param_v, params_nodes));
            fwd.compute_s = fwd_c;
            fwd.after_compute.push_back(
                make_task(TaskKind::D2hActivation, g, b, act_v, act_nodes));
            gs.fwd.push_back(std::move(fwd));
        }
        for (std::uint64_t i = 0; i < model.num_blocks; ++i) {
            std::uint64_t b = model.num_blocks - 1 - i;  // reverse of forward order
            double param_v = static_cast<double>(param_bytes_for_block(vols, b, model.num_blocks));
            double grad_v = param_v;  // gradients mirror the parameter distribution
            double act_v = static_cast<double>(vols.activation_per_block_per_gpu);

            BlockTasks bwd;
            bwd.block = b;
            bwd.before_compute.push_back(make_task(TaskKind::H2dParam, g, b, param_v, params_nodes));
            bwd.before_compute.push_back(
                make_task(TaskKind::H2dActivation, g, b, act_v, act_nodes));
            bwd.compute_s = bwd_c;
            bwd.after_compute.push_back(make_task(TaskKind::D2hGrad, g, b, grad_v, grads_nodes));
            gs.bwd.push_back(std::move(bwd));
        }
        sched.gpus.push_back(std::move(gs));
    }
    return sched;
}

std::vector<TierShare> cpu_compute_tiers(const PlacementPlan& plan, const Topology& topo) {
    std::map<std::string, std::uint64_t> per_node;
    for (Component c : {Component::ParamsFp32, Component::GradsFp32, Component::OptimStates}) {
        auto it = plan.stripes.find(c);
        if (it == plan.stripes.end()) continue;
        for (const auto& s : it->second) per_node[s.node] += s.bytes;
    }
    std::vector<TierShare> tiers;
    for (const auto& [node, bytes] : per_node) {
        const MemoryNode* n = topo.find_node(node);
        if (!n) throw ValidationError("plan references unknown node '" + node + "'");
        tiers.push_back({node, bytes, n->cpu_stream_bandwidth, n->load_latency_ns});
    }
    return tiers;
}

double optimizer_step_time(double elements, const std::vector<TierShare>& tiers,
                           bool parallel_striped, const CpuModel& cpu) {
    if (elements <= 0) return 0.0;

    double traffic = kOptimizerBytesPerElement * elements;
    double streamed = std::max(0.0, traffic - cpu.cache_bytes);
    long double placed = 0;
    for (const auto& t : tiers) placed += static_cast<long double>(t.bytes);

    double mem_time = 0.0;
    if (streamed > 0 && placed > 0) {
        if (parallel_striped) {
            double bw_sum = 0.0;
            double lat = 0.0;
            for (const auto& t : tiers) {
                if (t.bytes == 0) continue;
                bw_sum += t.stream_bandwidth;
                lat = std::max(lat, t.load_latency_ns);
            }
            bw_sum = std::min(bw_sum, cpu.aggregate_stream_bandwidth);
            mem_time = streamed / bw_sum + lat * 1e-9;
        } else {
            for (const auto& t : tiers) {
                if (t.bytes == 0) continue;
                double fraction = static_cast<double>(static_cast<long double>(t.bytes) / placed);
                mem_time += streamed * fraction / t.stream_bandwidth + t.load_latency_ns * 1e-9;
            }
        }
    }
    double compute_time = elements / cpu.compute_elems_per_s;
    return std::max(mem_time, compute_time);
}

namespace {

// Builds the contention flows for one transfer task. Reads (H2D) exit the
// memory node toward the host then cross the GPU link outward; writes (D2H)
// go the opposite way. DRAM has no link of its own.
std::vector<Flow> task_flows(const TransferTask& task, const Topology& topo,
                             const std::string& gpu_link) {
    std::vector<Flow> flows;
    bool h2d = task.kind == TaskKind::H2dParam || task.kind == TaskKind::H2dActivation;
    for (const auto& fs : task.flows) {
        const MemoryNode* node = topo.find_node(fs.node);
        if (!node) throw ValidationError("task references unknown node '" + fs.node + "'");
        Flow flow;
        flow.id = "g" + std::to_string(task.gpu) + ".b" + std::to_string(task.block) + "." +
                  std::to_string(static_cast<int>(task.kind)) + "." + fs.node;
        flow.demand = fs.bytes;
        if (h2d) {
            if (node->kind == NodeKind::CxlAic) flow.path.push_back({*node->link, Direction::ToHost});
            flow.path.push_back({gpu_link, Direction::FromHost});
        } else {
            flow.path.push_back({gpu_link, Direction::ToHost});
            if (node->kind == NodeKind::CxlAic)
                flow.path.push_back({*node->link, Direction::FromHost});
        }
        flows.push_back(std::move(flow));
    }
    return flows;
}

// Per-GPU pipeline cursor over one phase's block list.
struct GpuState {
    const std::vector<BlockTasks>* blocks = nullptr;
    const std::string* gpu_link = nullptr;
    OverlapModel overlap = OverlapModel::DoubleBuffered;

    // Serial mode walks items one at a time; double-buffered runs stage s =
    // {transfers of block s} || {compute of block s-1}.
    std::size_t stage = 0;
    std::size_t serial_item = 0;
    bool transfer_done = false;
    bool compute_done = false;
    double compute_remaining = 0.0;
    bool computing = false;
    std::vector<Flow> flows;
    bool finished = false;
};

class PhaseRunner {
  public:
    PhaseRunner(const Topology& topo, OverlapModel overlap) : topo_(topo), overlap_(overlap) {}

    // Runs one phase for all GPUs; returns the phase makespan.
    double run(const std::vector<const std::vector<BlockTasks>*>& gpu_blocks,
               std::map<std::string, double>& link_busy) {
        std::vector<GpuState> gpus(gpu_blocks.size());
        for (std::size_t g = 0; g < gpu_blocks.size(); ++g) {
            gpus[g].blocks = gpu_blocks[g];
            gpus[g].gpu_link = &topo_.gpus[g].link;
            gpus[g].overlap = overlap_;
            start_stage(gpus[g], g);
        }

        double now = 0.0;
        std::size_t guard = 0;
        while (true) {
            bool all_done = true;
            for (const auto& gs : gpus)
                if (!gs.finished) all_done = false;
            if (all_done) break;
            if (++guard > 50'000'000) throw SimError("phase simulation did not converge");

            std::vector<Flow> active;
            for (const auto& gs : gpus)
                for (const auto& f : gs.flows) active.push_back(f);

            RateAssignment rates;
            double dt = std::numeric_limits<double>::infinity();
            if (!active.empty()) {
                rates = maxmin_rates(active, topo_.links);
                for (const auto& f : active) {
                    double r = rates.at(f.id);
                    if (r <= 0) throw SimError("zero-rate deadlock on flow '" + f.id + "'");
                    dt = std::min(dt, f.demand / r);
                }
            }
            for (const auto& gs : gpus)
                if (gs.computing) dt = std::min(dt, gs.compute_remaining);
            assert(dt < std::numeric_limits<double>::infinity());

            if (dt > 0 && !active.empty()) {
                std::map<std::string, bool> links_active;
                for (const auto& f : active)
                    for (const auto& hop : f.path) links_active[hop.link] = true;
                for (const auto& [link, on] : links_active)
                    if (on) link_busy[link] += dt;
            }

            now += dt;
            for (auto& gs : gpus) {
                for (auto& f : gs.flows) {
                    f.demand -= rates.at(f.id) * dt;
                    if (f.demand <= 1.0) f.demand = 0.0;
                }
                gs.flows.erase(std::remove_if(gs.flows.begin(), gs.flows.end(),
                                              [](const Flow& f) { return f.demand <= 0.0; }),
                               gs.flows.end());
                if (gs.computing) {
                    gs.compute_remaining -= dt;
                    if (gs.compute_remaining <= 1e-15) {
                        gs.compute_remaining = 0.0;
                        gs.computing = false;
                        gs.compute_done = true;
                    }
                }
            }
            for (std::size_t g = 0; g < gpus.size(); ++g) advance_state(gpus[g], g);
        }
        return now;
    }

  private:
    void issue_transfers(GpuState& gs, std::size_t g, const std::vector<TransferTask>& tasks) {
        for (const auto& t : tasks) {
            auto flows = task_flows(t, topo_, *gs.gpu_link);
            for (auto& f : flows) gs.flows.push_back(std::move(f));
        }
        (void)g;
    }

    void start_stage(GpuState& gs, std::size_t g) {
        const auto& blocks = *gs.blocks;
        if (gs.overlap == OverlapModel::DoubleBuffered) {
            // Stage s: transfer bundle of block s overlaps compute of block s-1.
            if (gs.stage > blocks.size()) {
                gs.finished = true;
                return;
            }
            gs.transfer_done = true;
            gs.compute_done = true;
            if (gs.stage < blocks.size()) {
                gs.transfer_done = false;
                issue_transfers(gs, g, blocks[gs.stage].before_compute);
                issue_transfers(gs, g, blocks[gs.stage].after_compute);
                if (gs.flows.empty()) gs.transfer_done = true;
            }
            if (gs.stage >= 1) {
                gs.compute_done = false;
                gs.computing = true;
                gs.compute_remaining = blocks[gs.stage - 1].compute_s;
                if (gs.compute_remaining <= 0) {
                    gs.computing = false;
                    gs.compute_done = true;
                }
            }
            if (gs.transfer_done && gs.compute_done) {
                gs.stage += 1;
                start_stage(gs, g);
            }
        } else {
            // Serial: items are [loads..., compute, offloads...] per block.
            while (true) {
                if (gs.stage >= blocks.size()) {
                    gs.finished = true;
                    return;
                }
                const BlockTasks& blk = blocks[gs.stage];
                std::size_t n_items = blk.before_compute.size() + 1 + blk.after_compute.size();
                if (gs.serial_item >= n_items) {
                    gs.stage += 1;
                    gs.serial_item = 0;
                    continue;
                }
                std::size_t idx = gs.serial_item;
                if (idx < blk.before_compute.size()) {
                    issue_transfers(gs, g, {blk.before_compute[idx]});
                    if (!gs.flows.empty()) return;
                    gs.serial_item += 1;
                    continue;
                }
                idx -= blk.before_compute.size();
                if (idx == 0) {
                    if (blk.compute_s > 0) {
                        gs.computing = true;
                        gs.compute_remaining = blk.compute_s;
                        return;
                    }
                    gs.serial_item += 1;
                    continue;
                }
                issue_transfers(gs, g, {blk.after_compute[idx - 1]});
                if (!gs.flows.empty()) return;
                gs.serial_item += 1;
            }
        }
    }

    void advance_state(GpuState& gs, std::size_t g) {
        if (gs.finished) return;
        if (gs.overlap == OverlapModel::DoubleBuffered) {
            if (!gs.transfer_done && gs.flows.empty()) gs.transfer_done = true;
            if (gs.transfer_done && gs.compute_done) {
                gs.stage += 1;
                start_stage(gs, g);
            }
        } else {
            bool item_done = gs.flows.empty() && !gs.computing;
            if (item_done) {
                gs.serial_item += 1;
                start_stage(gs, g);
            }
        }
    }

    const Topology& topo_;
    OverlapModel overlap_;
};

}  // namespace

IterationReport simulate(const ModelSpec& model, const TrainingConfig& train,
                         const PlacementPlan& plan, const Topology& topo, OverlapModel overlap,
                         const CpuModel& cpu) {
    PhaseSchedule sched = build_schedule(model, train, plan, topo);

    IterationReport report;
    PhaseRunner runner(topo, overlap);

    std::vector<const std::vector<BlockTasks>*> fwd_blocks, bwd_blocks;
    for (const auto& gs : sched.gpus) {
        fwd_blocks.push_back(&gs.fwd);
        bwd_blocks.push_back(&gs.bwd);
    }
    report.fwd_s = runner.run(fwd_blocks, report.per_phase_per_link_busy["fwd"]);
    report.bwd_s = runner.run(bwd_blocks, report.per_phase_per_link_busy["bwd"]);
    report.step_s = optimizer_step_time(sched.optimizer_elements, cpu_compute_tiers(plan, topo),
                                        plan.cpu_parallel_striped, cpu);
    report.total_s = report.fwd_s + report.bwd_s + report.step_s;

    double tokens = static_cast<double>(train.num_gpus) * static_cast<double>(train.batch) *
                    static_cast<double>(train.context);
    report.throughput = tokens / report.total_s;
    report.per_node_peak = plan.per_node_bytes();
    return report;
}

}  // namespace tiersim
