#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common.hpp"

namespace tiersim {

using nlohmann::json;

namespace {

std::uint64_t json_bytes(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number()) {
        double v = j.get<double>();
        if (v < 0) throw ParseError(where + ": negative byte count");
        return static_cast<std::uint64_t>(std::llround(v));
    }
    if (j.is_string()) return parse_bytes(j.get<std::string>());
    throw ParseError(where + ": expected a byte count (number or string with unit)");
}

double json_rate(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_rate(j.get<std::string>());
    throw ParseError(where + ": expected a rate (number or string with unit)");
}

std::uint64_t json_count(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number()) {
        double v = j.get<double>();
        if (v < 0 || v != std::floor(v)) throw ParseError(where + ": expected a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }
    throw ParseError(where + ": expected a count");
}

ModelSpec parse_model(const json& j) {
    ModelSpec m;
    if (j.contains("preset")) {
        auto p = model_preset(j.at("preset").get<std::string>());
        if (!p) throw ParseError("model.preset: unknown preset '" + j.at("preset").get<std::string>() + "'");
        m = *p;
    }
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    if (j.contains("total_params")) m.total_params = json_count(j.at("total_params"), "model.total_params");
    if (j.contains("num_blocks")) m.num_blocks = json_count(j.at("num_blocks"), "model.num_blocks");
    if (j.contains("hidden_size")) m.hidden_size = json_count(j.at("hidden_size"), "model.hidden_size");
    if (m.name.empty()) m.name = "custom";
    validate(m);
    return m;
}

TrainingConfig parse_training(const json& j) {
    TrainingConfig t;
    if (j.contains("num_gpus")) t.num_gpus = static_cast<std::uint32_t>(json_count(j.at("num_gpus"), "training.num_gpus"));
    if (j.contains("batch")) t.batch = json_count(j.at("batch"), "training.batch");
    if (j.contains("context")) t.context = json_count(j.at("context"), "training.context");
    validate(t);
    return t;
}

MemoryNode parse_node(const json& j, const std::string& where) {
    MemoryNode n;
    n.id = j.at("id").get<std::string>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "local-dram" || kind == "dram")
        n.kind = NodeKind::LocalDram;
    else if (kind == "cxl-aic" || kind == "cxl")
        n.kind = NodeKind::CxlAic;
    else
        throw ParseError(where + ".kind: unknown node kind '" + kind + "'");
    n.capacity = json_bytes(j.at("capacity"), where + ".capacity");
    n.load_latency_ns = j.at("load_latency_ns").get<double>();
    n.cpu_stream_bandwidth = json_rate(j.at("cpu_stream_bandwidth"), where + ".cpu_stream_bandwidth");
    if (j.contains("link")) n.link = j.at("link").get<std::string>();
    return n;
}

// Applies scalar overrides from a preset-based topology block onto both the
// topology and the calibration parameter set.
void apply_topology_overrides(const json& j, Topology& topo, CalibParams& calib) {
    if (j.contains("dram_cap_override"))
        topo.dram_cap_override = json_bytes(j.at("dram_cap_override"), "topology.dram_cap_override");
    if (j.contains("compute_rate")) {
        calib.compute_rate = json_rate(j.at("compute_rate"), "topology.compute_rate");
        for (auto& g : topo.gpus) g.compute_rate = calib.compute_rate;
    }
    if (j.contains("recompute_factor")) {
        calib.recompute_factor = j.at("recompute_factor").get<double>();
        for (auto& g : topo.gpus) g.recompute_factor = calib.recompute_factor;
    }
    if (j.contains("dram_stream_bandwidth")) {
        calib.dram_stream_bandwidth =
            json_rate(j.at("dram_stream_bandwidth"), "topology.dram_stream_bandwidth");
        for (auto& n : topo.nodes)
            if (n.kind == NodeKind::LocalDram) n.cpu_stream_bandwidth = calib.dram_stream_bandwidth;
    }
    if (j.contains("cxl_stream_bandwidth")) {
        calib.cxl_stream_bandwidth =
            json_rate(j.at("cxl_stream_bandwidth"), "topology.cxl_stream_bandwidth");
        for (auto& n : topo.nodes)
            if (n.kind == NodeKind::CxlAic) n.cpu_stream_bandwidth = calib.cxl_stream_bandwidth;
    }
    if (j.contains("dram_latency_ns")) {
        calib.dram_load_latency_ns = j.at("dram_latency_ns").get<double>();
        for (auto& n : topo.nodes)
            if (n.kind == NodeKind::LocalDram) n.load_latency_ns = calib.dram_load_latency_ns;
    }
    if (j.contains("cxl_latency_ns")) {
        calib.cxl_load_latency_ns = j.at("cxl_latency_ns").get<double>();
        for (auto& n : topo.nodes)
            if (n.kind == NodeKind::CxlAic) n.load_latency_ns = calib.cxl_load_latency_ns;
    }
    if (j.contains("link_rate")) {
        calib.link_rate = json_rate(j.at("link_rate"), "topology.link_rate");
        for (auto& l : topo.links) l.per_direction_capacity = calib.link_rate;
    }
    if (j.contains("aic_eta")) {
        calib.aic_eta = j.at("aic_eta").get<std::vector<double>>();
        for (auto& l : topo.links) {
            bool is_aic_link = false;
            for (const auto& n : topo.nodes)
                if (n.link && *n.link == l.id) is_aic_link = true;
            if (is_aic_link) l.multiflow_efficiency = calib.aic_eta;
        }
    }
}

void parse_topology(const json& j, ScenarioConfig& cfg) {
    if (j.contains("preset")) {
        std::string name = j.at("preset").get<std::string>();
        auto p = preset_from_name(name);
        if (!p) throw ParseError("topology.preset: unknown preset '" + name + "'");
        cfg.topology = preset(*p);
        cfg.topology_id = *p == TopologyPreset::ConfigA ? "config-a" : "config-b";
        apply_topology_overrides(j, cfg.topology, cfg.calib);
        return;
    }
    cfg.topology_id = "inline";
    Topology topo;
    if (!j.contains("nodes") || !j.contains("links") || !j.contains("gpus"))
        throw ParseError("topology: inline topology requires nodes, links, and gpus");
    std::size_t i = 0;
    for (const auto& nj : j.at("nodes"))
        topo.nodes.push_back(parse_node(nj, "topology.nodes[" + std::to_string(i++) + "]"));
    i = 0;
    for (const auto& lj : j.at("links")) {
        std::string where = "topology.links[" + std::to_string(i++) + "]";
        Link l;
        l.id = lj.at("id").get<std::string>();
        l.per_direction_capacity = json_rate(lj.at("per_direction_capacity"), where);
        if (lj.contains("multiflow_efficiency"))
            l.multiflow_efficiency = lj.at("multiflow_efficiency").get<std::vector<double>>();
        topo.links.push_back(l);
    }
    i = 0;
    for (const auto& gj : j.at("gpus")) {
        std::string where = "topology.gpus[" + std::to_string(i++) + "]";
        GpuDevice g;
        g.id = gj.at("id").get<std::string>();
        g.link = gj.at("link").get<std::string>();
        g.compute_rate = json_rate(gj.at("compute_rate"), where + ".compute_rate");
        g.recompute_factor = gj.contains("recompute_factor") ? gj.at("recompute_factor").get<double>()
                                                             : cfg.calib.recompute_factor;
        topo.gpus.push_back(g);
    }
    if (j.contains("dram_cap_override"))
        topo.dram_cap_override = json_bytes(j.at("dram_cap_override"), "topology.dram_cap_override");
    cfg.topology = topo;
}

PolicyEntry parse_policy_entry(const json& j, const std::string& where) {
    PolicyEntry e;
    std::string name;
    if (j.is_string()) {
        name = j.get<std::string>();
    } else {
        name = j.at("policy").get<std::string>();
        if (j.contains("baseline")) e.baseline = j.at("baseline").get<bool>();
        if (j.contains("dram_cap_override"))
            e.dram_cap_override = json_bytes(j.at("dram_cap_override"), where + ".dram_cap_override");
    }
    auto p = policy_from_name(name);
    if (!p) throw ParseError(where + ": unknown policy '" + name + "'");
    e.policy = *p;
    return e;
}

}  // namespace

ScenarioConfig load_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }

    ScenarioConfig cfg;
    cfg.calib = default_params();

    if (j.contains("cpu")) {
        const auto& c = j.at("cpu");
        if (c.contains("compute_elems_per_s"))
            cfg.calib.compute_elems_per_s = json_rate(c.at("compute_elems_per_s"), "cpu.compute_elems_per_s");
        if (c.contains("cache_bytes"))
            cfg.calib.cpu_cache_bytes =
                static_cast<double>(json_bytes(c.at("cache_bytes"), "cpu.cache_bytes"));
        if (c.contains("aggregate_stream_bandwidth"))
            cfg.calib.cpu_aggregate_stream_bandwidth =
                json_rate(c.at("aggregate_stream_bandwidth"), "cpu.aggregate_stream_bandwidth");
    }

    if (!j.contains("model")) throw ParseError("config: missing 'model'");
    cfg.model = parse_model(j.at("model"));

    if (!j.contains("training")) throw ParseError("config: missing 'training'");
    cfg.train = parse_training(j.at("training"));

    if (!j.contains("topology")) throw ParseError("config: missing 'topology'");
    parse_topology(j.at("topology"), cfg);

    auto violations = validate(cfg.topology);
    if (!violations.empty()) {
        std::string msg = "topology invalid:";
        for (const auto& v : violations) msg += "\n  " + to_string(v);
        throw ValidationError(msg);
    }

    if (j.contains("policies")) {
        std::size_t i = 0;
        for (const auto& pj : j.at("policies"))
            cfg.policies.push_back(parse_policy_entry(pj, "policies[" + std::to_string(i++) + "]"));
    }
    if (cfg.policies.empty()) cfg.policies.push_back({Policy::DramOnly, true, std::nullopt});
    bool has_baseline = false;
    for (const auto& e : cfg.policies) has_baseline |= e.baseline;
    if (!has_baseline) {
        for (auto& e : cfg.policies) {
            if (e.policy == Policy::DramOnly) {
                e.baseline = true;
                has_baseline = true;
                break;
            }
        }
        if (!has_baseline) cfg.policies.front().baseline = true;
    }

    if (j.contains("overlap")) {
        std::string o = j.at("overlap").get<std::string>();
        if (o == "none")
            cfg.overlap = OverlapModel::None;
        else if (o == "double-buffered" || o == "double_buffered")
            cfg.overlap = OverlapModel::DoubleBuffered;
        else
            throw ParseError("overlap: expected 'none' or 'double-buffered'");
    }

    if (j.contains("placement")) {
        const auto& p = j.at("placement");
        if (p.contains("granularity"))
            cfg.placement.granularity = json_bytes(p.at("granularity"), "placement.granularity");
        if (p.contains("spill_order")) {
            cfg.placement.spill_order.clear();
            for (const auto& cj : p.at("spill_order")) {
                auto c = component_from_name(cj.get<std::string>());
                if (!c || classify(*c) != ComponentClass::CpuCompute)
                    throw ParseError("placement.spill_order: expected CPU-compute component names");
                cfg.placement.spill_order.push_back(*c);
            }
        }
    }
    cfg.placement.granularity = cfg.placement.granularity ? cfg.placement.granularity
                                                          : cfg.calib.interleave_granularity;

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        auto read_axis = [&](const char* key, auto& out) {
            if (!s.contains(key)) return;
            for (const auto& v : s.at(key)) {
                using elem = typename std::decay_t<decltype(out)>::value_type;
                out.push_back(static_cast<elem>(json_count(v, std::string("sweep.") + key)));
            }
            if (out.empty())
                throw ParseError(std::string("sweep.") + key + ": axis must be non-empty");
        };
        read_axis("context", cfg.sweep_context);
        read_axis("batch", cfg.sweep_batch);
        read_axis("num_gpus", cfg.sweep_gpus);
    }

    std::uint32_t max_gpus = cfg.train.num_gpus;
    for (auto g : cfg.sweep_gpus) max_gpus = std::max(max_gpus, g);
    if (max_gpus > cfg.topology.gpus.size())
        throw ValidationError("training.num_gpus exceeds GPUs defined in topology");

    return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

std::size_t sweep_size(const ScenarioConfig& config) {
    std::size_t c = config.sweep_context.empty() ? 1 : config.sweep_context.size();
    std::size_t b = config.sweep_batch.empty() ? 1 : config.sweep_batch.size();
    std::size_t g = config.sweep_gpus.empty() ? 1 : config.sweep_gpus.size();
    return c * b * g * config.policies.size();
}

std::vector<RunRecord> run(const ScenarioConfig& config) {
    std::vector<std::uint64_t> contexts =
        config.sweep_context.empty() ? std::vector<std::uint64_t>{config.train.context}
                                     : config.sweep_context;
    std::vector<std::uint64_t> batches =
        config.sweep_batch.empty() ? std::vector<std::uint64_t>{config.train.batch}
                                   : config.sweep_batch;
    std::vector<std::uint32_t> gpu_counts =
        config.sweep_gpus.empty() ? std::vector<std::uint32_t>{config.train.num_gpus}
                                  : config.sweep_gpus;
    std::sort(contexts.begin(), contexts.end());
    std::sort(batches.begin(), batches.end());
    std::sort(gpu_counts.begin(), gpu_counts.end());

    std::vector<RunRecord> records;
    for (std::uint64_t c : contexts) {
        for (std::uint64_t b : batches) {
            for (std::uint32_t g : gpu_counts) {
                TrainingConfig train{g, b, c};
                std::size_t baseline_idx = records.size();
                bool have_baseline = false;
                for (const auto& entry : config.policies) {
                    RunRecord rec;
                    rec.model_name = config.model.name;
                    rec.total_params = config.model.total_params;
                    rec.num_blocks = config.model.num_blocks;
                    rec.hidden_size = config.model.hidden_size;
                    rec.context = c;
                    rec.batch = b;
                    rec.num_gpus = g;
                    rec.topology_id = config.topology_id;
                    rec.policy = to_string(entry.policy);
                    rec.baseline = entry.baseline;
                    rec.footprint = footprint(config.model, train);

                    Topology topo = config.topology;
                    if (entry.dram_cap_override) topo.dram_cap_override = entry.dram_cap_override;
                    try {
                        PlacementPlan p = plan(entry.policy, topo, config.model, train,
                                               config.placement);
                        rec.report = simulate(config.model, train, p, topo, config.overlap,
                                              config.calib.cpu_model());
                        rec.feasible = true;
                        rec.node_bytes = p.per_node_bytes();
                        rec.cpu_parallel_striped = p.cpu_parallel_striped;
                        rec.spill_notes = p.spill_notes;
                    } catch (const InfeasiblePlacement& e) {
                        rec.feasible = false;
                        rec.violation = std::string("infeasible: ") + e.what();
                    } catch (const ValidationError& e) {
                        rec.feasible = false;
                        rec.violation = std::string("invalid: ") + e.what();
                    }
                    if (entry.baseline && rec.feasible) {
                        baseline_idx = records.size();
                        have_baseline = true;
                    }
                    records.push_back(std::move(rec));
                }
                if (have_baseline) {
                    double base_tp = records[baseline_idx].report.throughput;
                    for (std::size_t i = baseline_idx; i < records.size(); ++i) {
                        if (!records[i].feasible) continue;
                        records[i].normalized =
                            i == baseline_idx ? 1.0 : records[i].report.throughput / base_tp;
                    }
                    // Records before the baseline entry in this group.
                    std::size_t group_start = records.size() - config.policies.size();
                    for (std::size_t i = group_start; i < baseline_idx; ++i)
                        if (records[i].feasible)
                            records[i].normalized = records[i].report.throughput / base_tp;
                }
            }
        }
    }
    return records;
}

std::optional<ReportFormat> format_from_name(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "jsonl" || name == "json-lines") return ReportFormat::JsonLines;
    if (name == "table") return ReportFormat::Table;
    return std::nullopt;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += "\"";
    return out;
}

std::string join_node_bytes(const std::map<std::string, std::uint64_t>& m) {
    std::string out;
    for (const auto& [node, bytes] : m) {
        if (!out.empty()) out += ";";
        out += node + "=" + std::to_string(bytes);
    }
    return out;
}

json record_to_json(const RunRecord& r) {
    json j;
    j["model"] = r.model_name;
    j["total_params"] = r.total_params;
    j["num_blocks"] = r.num_blocks;
    j["hidden_size"] = r.hidden_size;
    j["context"] = r.context;
    j["batch"] = r.batch;
    j["num_gpus"] = r.num_gpus;
    j["topology"] = r.topology_id;
    j["policy"] = r.policy;
    j["baseline"] = r.baseline;
    j["feasible"] = r.feasible;
    if (!r.feasible) {
        j["violation"] = r.violation;
        j["footprint_total_bytes"] = r.footprint.total;
        return j;
    }
    j["fwd_s"] = r.report.fwd_s;
    j["bwd_s"] = r.report.bwd_s;
    j["step_s"] = r.report.step_s;
    j["total_s"] = r.report.total_s;
    j["throughput_tokens_per_s"] = r.report.throughput;
    if (r.normalized >= 0) j["normalized"] = r.normalized;
    j["footprint_total_bytes"] = r.footprint.total;
    j["activations_bytes"] = r.footprint.bytes.at(Component::Activations);
    j["node_bytes"] = r.node_bytes;
    j["cpu_striped"] = r.cpu_parallel_striped;
    if (!r.spill_notes.empty()) j["spill"] = r.spill_notes;
    return j;
}

const char* kCsvHeader =
    "model,total_params,num_blocks,hidden_size,context,batch,num_gpus,topology,policy,baseline,"
    "feasible,violation,fwd_s,bwd_s,step_s,total_s,throughput_tokens_per_s,normalized,"
    "footprint_total_bytes,activations_bytes,cpu_striped,node_bytes,spill";

std::string record_to_csv(const RunRecord& r) {
    std::ostringstream os;
    os << csv_escape(r.model_name) << "," << r.total_params << "," << r.num_blocks << ","
       << r.hidden_size << "," << r.context << "," << r.batch << "," << r.num_gpus << ","
       << r.topology_id << "," << r.policy << "," << (r.baseline ? 1 : 0) << ","
       << (r.feasible ? 1 : 0) << "," << csv_escape(r.violation) << ",";
    if (r.feasible) {
        os << fmt_double(r.report.fwd_s) << "," << fmt_double(r.report.bwd_s) << ","
           << fmt_double(r.report.step_s) << "," << fmt_double(r.report.total_s) << ","
           << fmt_double(r.report.throughput) << ","
           << (r.normalized >= 0 ? fmt_double(r.normalized) : "") << "," << r.footprint.total
           << "," << r.footprint.bytes.at(Component::Activations) << ","
           << (r.cpu_parallel_striped ? 1 : 0) << "," << csv_escape(join_node_bytes(r.node_bytes));
        std::string spill;
        for (const auto& s : r.spill_notes) {
            if (!spill.empty()) spill += " | ";
            spill += s;
        }
        os << "," << csv_escape(spill);
    } else {
        os << ",,,,,," << r.footprint.total << ",,,,";
    }
    return os.str();
}

}  // namespace

std::string render(const std::vector<RunRecord>& records, ReportFormat format) {
    std::ostringstream os;
    if (format == ReportFormat::Csv) {
        os << kCsvHeader << "\n";
        for (const auto& r : records) os << record_to_csv(r) << "\n";
        return os.str();
    }
    if (format == ReportFormat::JsonLines) {
        for (const auto& r : records) os << record_to_json(r).dump() << "\n";
        return os.str();
    }

    // Table: one row per coordinate, one column per policy, cells show
    // normalized throughput.
    std::vector<std::string> policies;
    for (const auto& r : records)
        if (std::find(policies.begin(), policies.end(), r.policy) == policies.end())
            policies.push_back(r.policy);

    os << "model      context  batch  gpus ";
    for (const auto& p : policies) {
        os << " ";
        os.width(18);
        os << p;
    }
    os << "\n";
    std::map<std::tuple<std::string, std::uint64_t, std::uint64_t, std::uint32_t>,
             std::map<std::string, const RunRecord*>>
        grid;
    for (const auto& r : records)
        grid[{r.model_name, r.context, r.batch, r.num_gpus}][r.policy] = &r;
    for (const auto& [coord, row] : grid) {
        char head[64];
        std::snprintf(head, sizeof(head), "%-10s %7llu %6llu %5u",
                      std::get<0>(coord).c_str(),
                      static_cast<unsigned long long>(std::get<1>(coord)),
                      static_cast<unsigned long long>(std::get<2>(coord)), std::get<3>(coord));
        os << head;
        for (const auto& p : policies) {
            os << " ";
            auto it = row.find(p);
            std::string cell = "-";
            if (it != row.end()) {
                if (!it->second->feasible)
                    cell = "infeasible";
                else if (it->second->normalized >= 0) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.1f%%", it->second->normalized * 100.0);
                    cell = buf;
                } else {
                    cell = fmt_double(it->second->report.throughput) + " tok/s";
                }
            }
            os.width(18);
            os << cell;
        }
        os << "\n";
    }
    return os.str();
}

std::string plan_text(const ScenarioConfig& config) {
    std::ostringstream os;
    FootprintReport fp = footprint(config.model, config.train);
    os << "model: " << config.model.name << "  P=" << config.model.total_params
       << " L=" << config.model.num_blocks << " H=" << config.model.hidden_size << "\n";
    os << "training: num_gpus=" << config.train.num_gpus << " batch=" << config.train.batch
       << " context=" << config.train.context << "\n";
    os << "footprint:\n";
    for (Component c : kAllComponents)
        os << "  " << to_string(c) << "  " << format_bytes(fp.bytes.at(c)) << "\n";
    os << "  total  " << format_bytes(fp.total) << "\n\n";
    for (const auto& entry : config.policies) {
        Topology topo = config.topology;
        if (entry.dram_cap_override) topo.dram_cap_override = entry.dram_cap_override;
        os << "=== " << to_string(entry.policy) << (entry.baseline ? " (baseline)" : "") << " ===\n";
        try {
            PlacementPlan p = plan(entry.policy, topo, config.model, config.train, config.placement);
            os << describe(p);
        } catch (const InfeasiblePlacement& e) {
            os << "infeasible: " << e.what() << "\n";
        } catch (const ValidationError& e) {
            os << "invalid: " << e.what() << "\n";
        }
        os << "\n";
    }
    return os.str();
}

std::string presets_text() {
    json j;
    for (const auto& m : model_presets()) {
        json mj;
        mj["total_params"] = m.total_params;
        mj["num_blocks"] = m.num_blocks;
        mj["hidden_size"] = m.hidden_size;
        mj["approximate"] = m.approximate;
        j["models"][m.name] = mj;
    }
    for (auto which : {TopologyPreset::ConfigA, TopologyPreset::ConfigB}) {
        Topology t = preset(which);
        json tj;
        for (const auto& n : t.nodes) {
            json nj;
            nj["kind"] = n.kind == NodeKind::LocalDram ? "local-dram" : "cxl-aic";
            nj["capacity"] = n.capacity;
            nj["load_latency_ns"] = n.load_latency_ns;
            nj["cpu_stream_bandwidth"] = n.cpu_stream_bandwidth;
            if (n.link) nj["link"] = *n.link;
            tj["nodes"][n.id] = nj;
        }
        for (const auto& l : t.links) {
            json lj;
            lj["per_direction_capacity"] = l.per_direction_capacity;
            lj["multiflow_efficiency"] = l.multiflow_efficiency;
            tj["links"][l.id] = lj;
        }
        for (const auto& g : t.gpus) {
            json gj;
            gj["link"] = g.link;
            gj["compute_rate"] = g.compute_rate;
            gj["recompute_factor"] = g.recompute_factor;
            tj["gpus"][g.id] = gj;
        }
        j["topologies"][which == TopologyPreset::ConfigA ? "config-a" : "config-b"] = tj;
    }
    const CalibParams& c = default_params();
    json cj;
    cj["dram_load_latency_ns"] = c.dram_load_latency_ns;
    cj["cxl_load_latency_ns"] = c.cxl_load_latency_ns;
    cj["link_rate"] = c.link_rate;
    cj["aic_eta"] = c.aic_eta;
    cj["dram_stream_bandwidth"] = c.dram_stream_bandwidth;
    cj["cxl_stream_bandwidth"] = c.cxl_stream_bandwidth;
    cj["compute_elems_per_s"] = c.compute_elems_per_s;
    cj["cpu_cache_bytes"] = c.cpu_cache_bytes;
    cj["cpu_aggregate_stream_bandwidth"] = c.cpu_aggregate_stream_bandwidth;
    cj["compute_rate"] = c.compute_rate;
    cj["recompute_factor"] = c.recompute_factor;
    cj["interleave_granularity"] = c.interleave_granularity;
    j["calibration_defaults"] = cj;
    return j.dump(2) + "\n";
}

std::string calibrate_text(const ScenarioConfig& config, const std::string& anchors_json) {
    json aj;
    try {
        aj = json::parse(anchors_json, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("anchors: ") + e.what());
    }
    std::vector<Anchor> anchors;
    if (!aj.contains("anchors")) throw ParseError("anchors: missing 'anchors' list");
    std::size_t i = 0;
    for (const auto& a : aj.at("anchors")) {
        std::string where = "anchors[" + std::to_string(i++) + "]";
        Anchor anchor;
        anchor.name = a.value("name", where);
        anchor.kind = a.at("kind").get<std::string>();
        if (a.contains("elements")) anchor.elements = a.at("elements").get<double>();
        if (a.contains("flows")) anchor.flows = a.at("flows").get<int>();
        anchor.target = a.at("target").get<double>();
        anchor.tolerance = a.at("tolerance").get<double>();
        if (anchor.tolerance <= 0) throw ParseError(where + ".tolerance must be > 0");
        anchors.push_back(anchor);
    }
    std::vector<std::string> free_params;
    if (aj.contains("free_params"))
        for (const auto& f : aj.at("free_params")) free_params.push_back(f.get<std::string>());
    double resolution = aj.value("grid_resolution", 0.01);

    FitResult result = fit(anchors, free_params, config.calib, resolution);

    json out;
    for (const auto& name : free_params) {
        if (name == "dram_stream_bandwidth") out["fitted"][name] = result.params.dram_stream_bandwidth;
        if (name == "cxl_stream_bandwidth") out["fitted"][name] = result.params.cxl_stream_bandwidth;
        if (name == "compute_elems_per_s") out["fitted"][name] = result.params.compute_elems_per_s;
        if (name == "cache_bytes") out["fitted"][name] = result.params.cpu_cache_bytes;
        if (name == "compute_rate") out["fitted"][name] = result.params.compute_rate;
        if (name == "eta2")
            out["fitted"][name] = result.params.aic_eta.size() > 1 ? result.params.aic_eta[1] : 1.0;
    }
    for (const auto& r : result.residuals) {
        json rj;
        rj["name"] = r.anchor.name;
        rj["kind"] = r.anchor.kind;
        rj["target"] = r.anchor.target;
        rj["observed"] = r.observed;
        rj["residual"] = r.residual;
        rj["within_tolerance"] = r.within_tolerance;
        out["anchors"].push_back(rj);
    }
    out["max_residual"] = result.max_residual;
    out["no_improvement"] = result.no_improvement;
    out["passes"] = result.passes;
    return out.dump(2) + "\n";
}

}  // namespace tiersim
