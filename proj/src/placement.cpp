#include "placement.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <sstream>

#include "common.hpp"

namespace tiersim {

std::string to_string(Policy p) {
    switch (p) {
        case Policy::DramOnly: return "dram-only";
        case Policy::NaiveInterleave: return "naive";
        case Policy::CxlAware: return "cxl-aware";
        case Policy::CxlAwareStriped: return "cxl-aware-striped";
    }
    return "?";
}

std::optional<Policy> policy_from_name(const std::string& name) {
    if (name == "dram-only" || name == "dram_only" || name == "baseline") return Policy::DramOnly;
    if (name == "naive" || name == "naive-interleave") return Policy::NaiveInterleave;
    if (name == "cxl-aware" || name == "cxl_aware") return Policy::CxlAware;
    if (name == "cxl-aware-striped" || name == "striped") return Policy::CxlAwareStriped;
    return std::nullopt;
}

std::map<std::string, std::uint64_t> PlacementPlan::per_node_bytes() const {
    std::map<std::string, std::uint64_t> out;
    for (const auto& [comp, list] : stripes)
        for (const auto& s : list) out[s.node] += s.bytes;
    return out;
}

std::uint64_t PlacementPlan::component_total(Component c) const {
    auto it = stripes.find(c);
    if (it == stripes.end()) return 0;
    std::uint64_t sum = 0;
    for (const auto& s : it->second) sum += s.bytes;
    return sum;
}

namespace {

// One allocation request: a whole shared component or one GPU's share of a
// per-GPU component.
struct Share {
    Component component;
    std::uint64_t bytes;
    std::optional<std::uint32_t> gpu;
};

std::vector<Share> shares_of(Component c, const ModelSpec& model, const TrainingConfig& train) {
    std::uint64_t total = component_bytes(model, train, c);
    if (c != Component::Activations) return {{c, total, std::nullopt}};
    std::vector<Share> out;
    std::uint64_t per_gpu = total / train.num_gpus;  // exact: total = Ng * (2*B*C*L*H)
    for (std::uint32_t g = 0; g < train.num_gpus; ++g) out.push_back({c, per_gpu, g});
    return out;
}

class Planner {
  public:
    Planner(Policy policy, const Topology& topo, const ModelSpec& model,
            const TrainingConfig& train, const PlacementOptions& opts)
        : topo_(topo), model_(model), train_(train), opts_(opts) {
        plan_.policy = policy;
        plan_.granularity = opts.granularity;
        plan_.usable_dram = topo.usable_dram();
        dram_id_ = topo.local_dram().id;
        remaining_[dram_id_] = plan_.usable_dram;
        for (const auto* aic : topo.aics()) {
            aic_ids_.push_back(aic->id);
            remaining_[aic->id] = aic->capacity;
        }
    }

    PlacementPlan run() {
        switch (plan_.policy) {
            case Policy::DramOnly: dram_only(); break;
            case Policy::NaiveInterleave: naive_interleave(); break;
            case Policy::CxlAware: cxl_aware(false); break;
            case Policy::CxlAwareStriped: cxl_aware(true); break;
        }
        return std::move(plan_);
    }

  private:
    void add_stripe(Component c, const std::string& node, std::uint64_t bytes,
                    std::optional<std::uint32_t> gpu) {
        if (bytes == 0) return;
        assert(remaining_[node] >= bytes);
        remaining_[node] -= bytes;
        plan_.stripes[c].push_back({node, bytes, opts_.granularity, gpu});
    }

    void dram_only() {
        for (Component c : kAllComponents) {
            for (const Share& share : shares_of(c, model_, train_)) {
                if (remaining_[dram_id_] < share.bytes)
                    throw InfeasiblePlacement(
                        to_string(c), "component " + to_string(c) + " does not fit: needs " +
                                          format_bytes(share.bytes) + ", DRAM has " +
                                          format_bytes(remaining_[dram_id_]) + " left");
                add_stripe(c, dram_id_, share.bytes, share.gpu);
            }
        }
    }

    // Round-robin page distribution across all nodes with remaining capacity,
    // equal page shares per node; full nodes drop out of the rotation.
    void naive_interleave() {
        if (aic_ids_.empty())
            throw ValidationError("naive interleave requires at least one CXL AIC");
        std::vector<std::string> order;
        order.push_back(dram_id_);
        for (const auto& id : aic_ids_) order.push_back(id);

        const std::uint64_t gran = opts_.granularity;
        for (Component c : kAllComponents) {
            for (const Share& share : shares_of(c, model_, train_)) {
                std::uint64_t pages = (share.bytes + gran - 1) / gran;
                std::uint64_t tail = share.bytes - (pages - 1) * gran;

                std::vector<std::uint64_t> cap_pages(order.size());
                std::vector<std::uint64_t> assigned(order.size(), 0);
                for (std::size_t i = 0; i < order.size(); ++i)
                    cap_pages[i] = remaining_[order[i]] / gran;

                std::uint64_t left = pages;
                std::size_t last_owner = order.size();
                while (left > 0) {
                    std::vector<std::size_t> active;
                    for (std::size_t i = 0; i < order.size(); ++i)
                        if (cap_pages[i] > 0) active.push_back(i);
                    if (active.empty())
                        throw InfeasiblePlacement(
                            to_string(c), "component " + to_string(c) +
                                              " exceeds remaining capacity of all nodes");
                    std::uint64_t min_cap = cap_pages[active.front()];
                    for (std::size_t i : active) min_cap = std::min(min_cap, cap_pages[i]);
                    std::uint64_t rounds = std::min(left / active.size(), min_cap);
                    if (rounds > 0) {
                        for (std::size_t i : active) {
                            assigned[i] += rounds;
                            cap_pages[i] -= rounds;
                        }
                        left -= rounds * active.size();
                        if (left == 0) last_owner = active.back();
                    } else if (left < active.size()) {
                        for (std::uint64_t k = 0; k < left; ++k) assigned[active[k]] += 1;
                        last_owner = active[left - 1];
                        left = 0;
                    } else {
                        // rounds == 0 because some node is full; drop it next loop.
                        continue;
                    }
                }

                for (std::size_t i = 0; i < order.size(); ++i) {
                    if (assigned[i] == 0) continue;
                    std::uint64_t bytes = assigned[i] * gran;
                    if (i == last_owner) bytes -= gran - tail;
                    add_stripe(c, order[i], bytes, share.gpu);
                }
            }
        }
    }

    void cxl_aware(bool striped) {
        if (striped && aic_ids_.empty())
            throw ValidationError("cxl-aware-striped requires at least one CXL AIC");

        // CpuCompute keeps DRAM; the spill priority decides what leaves first
        // when DRAM is short. Reverse of spill order = DRAM retention priority.
        std::vector<Component> retention(opts_.spill_order.rbegin(), opts_.spill_order.rend());
        for (Component c : retention) {
            std::uint64_t bytes = component_bytes(model_, train_, c);
            if (remaining_[dram_id_] >= bytes) {
                add_stripe(c, dram_id_, bytes, std::nullopt);
            } else if (!striped) {
                spill_sequential(c, bytes);
            } else {
                spill_bandwidth_proportional(c, bytes);
            }
        }

        // Transfer data goes to the AICs.
        if (!aic_ids_.empty()) {
            for (std::uint32_t g = 0; g < train_.num_gpus && g < topo_.gpus.size(); ++g) {
                auto& aff = plan_.per_gpu_affinity[topo_.gpus[g].id];
                if (striped) {
                    aff = aic_ids_;
                } else {
                    aff = {aic_ids_[g % aic_ids_.size()]};
                }
            }
        }

        for (Component c : {Component::ParamsBf16, Component::GradsBf16, Component::Activations}) {
            for (const Share& share : shares_of(c, model_, train_)) {
                if (aic_ids_.empty()) {
                    place_sequential(c, share, {dram_id_}, "no AIC present");
                } else if (striped) {
                    stripe_balanced(c, share);
                } else {
                    std::vector<std::string> order;
                    std::size_t first = share.gpu ? (*share.gpu % aic_ids_.size()) : 0;
                    for (std::size_t k = 0; k < aic_ids_.size(); ++k)
                        order.push_back(aic_ids_[(first + k) % aic_ids_.size()]);
                    order.push_back(dram_id_);
                    place_sequential(c, share, order, "AICs full");
                }
            }
        }
    }

    // Fill nodes in order until the share is placed; the last node in `order`
    // acting as overflow gets a spill note.
    void place_sequential(Component c, const Share& share, const std::vector<std::string>& order,
                          const char* spill_reason) {
        std::uint64_t left = share.bytes;
        for (std::size_t i = 0; i < order.size() && left > 0; ++i) {
            std::uint64_t take = std::min(left, remaining_[order[i]]);
            if (take == 0) continue;
            if (order[i] == dram_id_ && i > 0)
                plan_.spill_notes.push_back(to_string(c) + " spilled " + format_bytes(take) +
                                            " to DRAM (" + spill_reason + ")");
            add_stripe(c, order[i], take, share.gpu);
            left -= take;
        }
        if (left > 0)
            throw InfeasiblePlacement(to_string(c),
                                      "component " + to_string(c) + " exceeds total usable capacity");
    }

    // CpuCompute overflow under plain CxlAware: what DRAM cannot hold walks
    // the AICs in order.
    void spill_sequential(Component c, std::uint64_t bytes) {
        std::uint64_t in_dram = std::min(bytes, remaining_[dram_id_]);
        add_stripe(c, dram_id_, in_dram, std::nullopt);
        std::uint64_t left = bytes - in_dram;
        plan_.spill_notes.push_back(to_string(c) + " spilled " + format_bytes(left) +
                                    " to CXL (DRAM full)");
        for (const auto& id : aic_ids_) {
            if (left == 0) break;
            std::uint64_t take = std::min(left, remaining_[id]);
            add_stripe(c, id, take, std::nullopt);
            left -= take;
        }
        if (left > 0)
            throw InfeasiblePlacement(to_string(c),
                                      "component " + to_string(c) + " exceeds total usable capacity");
    }

    // CpuCompute overflow under CxlAwareStriped: the whole component is
    // partitioned across DRAM remainder and every AIC in proportion to each
    // tier's CPU streaming bandwidth, so the optimizer can drain the tiers in
    // parallel.
    void spill_bandwidth_proportional(Component c, std::uint64_t bytes) {
        struct Tier {
            std::string node;
            double bw;
            std::uint64_t cap;
            std::uint64_t assign = 0;
            bool fixed = false;
        };
        std::vector<Tier> tiers;
        tiers.push_back({dram_id_, topo_.local_dram().cpu_stream_bandwidth, remaining_[dram_id_]});
        for (const auto* aic : topo_.aics())
            tiers.push_back({aic->id, aic->cpu_stream_bandwidth, remaining_[aic->id]});

        std::uint64_t pool = bytes;
        while (true) {
            double bw_sum = 0;
            for (const auto& t : tiers)
                if (!t.fixed) bw_sum += t.bw;
            if (bw_sum <= 0)
                throw InfeasiblePlacement(
                    to_string(c), "component " + to_string(c) + " exceeds total usable capacity");
            // Largest-remainder split keeps the byte sum exact.
            std::uint64_t given = 0;
            for (auto& t : tiers) {
                if (t.fixed) continue;
                t.assign = static_cast<std::uint64_t>(static_cast<long double>(pool) * t.bw / bw_sum);
                given += t.assign;
            }
            std::uint64_t deficit = pool - given;
            for (auto& t : tiers) {
                if (deficit == 0) break;
                if (t.fixed) continue;
                t.assign += 1;
                --deficit;
            }
            bool clamped = false;
            std::uint64_t overflow = 0;
            for (auto& t : tiers) {
                if (t.fixed) continue;
                if (t.assign > t.cap) {
                    overflow += t.assign - t.cap;
                    t.assign = t.cap;
                    t.fixed = true;
                    clamped = true;
                }
            }
            if (!clamped) break;
            // Tiers that hit capacity keep their full allotment; the rest of
            // the pool is re-split among the others.
            std::uint64_t placed_in_fixed = 0;
            for (const auto& t : tiers)
                if (t.fixed) placed_in_fixed += t.assign;
            pool = bytes - placed_in_fixed;
            bool any_free = false;
            for (const auto& t : tiers)
                if (!t.fixed) any_free = true;
            if (!any_free) {
                if (pool == 0) break;
                throw InfeasiblePlacement(
                    to_string(c), "component " + to_string(c) + " exceeds total usable capacity");
            }
        }

        std::uint64_t off_dram = 0;
        for (const auto& t : tiers) {
            add_stripe(c, t.node, t.assign, std::nullopt);
            if (t.node != dram_id_) off_dram += t.assign;
        }
        plan_.cpu_parallel_striped = true;
        plan_.spill_notes.push_back(to_string(c) + " striped across tiers (" +
                                    format_bytes(off_dram) + " off-DRAM), parallel CPU access");
    }

    // Equal page-granular split of one share across all AICs, balancing the
    // running per-AIC totals so the whole-plan skew stays within one page.
    void stripe_balanced(Component c, const Share& share) {
        const std::uint64_t gran = opts_.granularity;
        const std::size_t m = aic_ids_.size();
        std::uint64_t full_pages = share.bytes / gran;
        std::uint64_t tail = share.bytes % gran;

        std::vector<std::uint64_t> pages(m, full_pages / m);
        std::uint64_t extras = full_pages % m;
        std::vector<std::size_t> by_load(m);
        std::iota(by_load.begin(), by_load.end(), std::size_t{0});
        std::stable_sort(by_load.begin(), by_load.end(), [&](std::size_t a, std::size_t b) {
            return striped_load_[aic_ids_[a]] < striped_load_[aic_ids_[b]];
        });
        for (std::uint64_t k = 0; k < extras; ++k) pages[by_load[k]] += 1;

        std::vector<std::uint64_t> bytes(m);
        for (std::size_t i = 0; i < m; ++i) bytes[i] = pages[i] * gran;
        if (tail > 0) {
            std::size_t tgt = 0;
            std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
            for (std::size_t i = 0; i < m; ++i) {
                std::uint64_t load = striped_load_[aic_ids_[i]] + bytes[i];
                if (load < best) {
                    best = load;
                    tgt = i;
                }
            }
            bytes[tgt] += tail;
        }

        // Capacity fallback: excess moves to other AICs, then DRAM.
        std::uint64_t overflow = 0;
        for (std::size_t i = 0; i < m; ++i) {
            std::uint64_t cap = remaining_[aic_ids_[i]];
            if (bytes[i] > cap) {
                overflow += bytes[i] - cap;
                bytes[i] = cap;
            }
        }
        for (std::size_t i = 0; i < m && overflow > 0; ++i) {
            std::uint64_t room = remaining_[aic_ids_[i]] - bytes[i];
            std::uint64_t take = std::min(room, overflow);
            bytes[i] += take;
            overflow -= take;
        }

        for (std::size_t i = 0; i < m; ++i) {
            add_stripe(c, aic_ids_[i], bytes[i], share.gpu);
            striped_load_[aic_ids_[i]] += bytes[i];
        }
        if (overflow > 0) {
            std::uint64_t take = std::min(overflow, remaining_[dram_id_]);
            plan_.spill_notes.push_back(to_string(c) + " spilled " + format_bytes(take) +
                                        " to DRAM (AICs full)");
            add_stripe(c, dram_id_, take, share.gpu);
            overflow -= take;
        }
        if (overflow > 0)
            throw InfeasiblePlacement(to_string(c),
                                      "component " + to_string(c) + " exceeds total usable capacity");
    }

    const Topology& topo_;
    const ModelSpec& model_;
    const TrainingConfig& train_;
    const PlacementOptions& opts_;
    PlacementPlan plan_;
    std::string dram_id_;
    std::vector<std::string> aic_ids_;
    std::map<std::string, std::uint64_t> remaining_;
    std::map<std::string, std::uint64_t> striped_load_;
};

}  // namespace

PlacementPlan plan(Policy policy, const Topology& topo, const ModelSpec& model,
                   const TrainingConfig& train, const PlacementOptions& opts) {
    validate(model);
    validate(train);
    if (opts.granularity == 0) throw ValidationError("placement granularity must be > 0");
    return Planner(policy, topo, model, train, opts).run();
}

std::vector<Violation> check(const PlacementPlan& plan, const Topology& topo,
                             const ModelSpec& model, const TrainingConfig& train) {
    std::vector<Violation> out;
    for (Component c : kAllComponents) {
        std::uint64_t want = component_bytes(model, train, c);
        std::uint64_t have = plan.component_total(c);
        if (want != have)
            out.push_back({to_string(c), "conservation: stripes sum to " + format_bytes(have) +
                                             ", component is " + format_bytes(want)});
    }
    for (const auto& [comp, list] : plan.stripes) {
        for (const auto& s : list) {
            if (s.bytes == 0) out.push_back({to_string(comp), "stripe with zero bytes"});
            if (s.granularity == 0) out.push_back({to_string(comp), "stripe with zero granularity"});
            if (!topo.find_node(s.node))
                out.push_back({to_string(comp), "stripe on unknown node '" + s.node + "'"});
        }
    }
    std::uint64_t dram_limit = plan.usable_dram > 0 ? plan.usable_dram : topo.usable_dram();
    for (const auto& [node, bytes] : plan.per_node_bytes()) {
        const MemoryNode* n = topo.find_node(node);
        if (!n) continue;
        std::uint64_t cap = n->kind == NodeKind::LocalDram ? std::min(n->capacity, dram_limit)
                                                           : n->capacity;
        if (bytes > cap)
            out.push_back({node, "capacity: " + format_bytes(bytes) + " placed, " +
                                     format_bytes(cap) + " available"});
    }
    return out;
}

std::string describe(const PlacementPlan& plan) {
    std::ostringstream os;
    os << "policy: " << to_string(plan.policy) << "\n";
    os << "usable DRAM: " << format_bytes(plan.usable_dram) << "\n";
    for (Component c : kAllComponents) {
        auto it = plan.stripes.find(c);
        if (it == plan.stripes.end()) continue;
        os << "  " << to_string(c) << ":\n";
        for (const auto& s : it->second) {
            os << "    " << s.node << "  " << format_bytes(s.bytes);
            if (s.gpu) os << "  (gpu " << *s.gpu << ")";
            os << "\n";
        }
    }
    os << "per-node totals:\n";
    for (const auto& [node, bytes] : plan.per_node_bytes())
        os << "  " << node << "  " << format_bytes(bytes) << "\n";
    if (plan.cpu_parallel_striped) os << "CPU-compute tiers accessed in parallel\n";
    for (const auto& note : plan.spill_notes) os << "note: " << note << "\n";
    return os.str();
}

}  // namespace tiersim
