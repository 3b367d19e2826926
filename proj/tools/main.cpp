// Command-line front end. Talks to the simulator exclusively through the
// shared-library C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tiersim/tiersim.h"

namespace {

struct ConfigHandle {
    tiersim_config* ptr = nullptr;
    ~ConfigHandle() { tiersim_config_free(ptr); }
};

struct ResultHandle {
    tiersim_result* ptr = nullptr;
    ~ResultHandle() { tiersim_result_free(ptr); }
};

struct StringHandle {
    char* ptr = nullptr;
    ~StringHandle() { tiersim_string_free(ptr); }
};

int die(const char* what) {
    std::cerr << "error: " << what << ": " << tiersim_last_error() << "\n";
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open '" << path << "'\n";
        std::exit(1);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return 1;
    }
    out << text;
    return 0;
}

// Replaces the config's policy list with the one given on the command line.
std::string override_policies(const std::string& config_text,
                              const std::vector<std::string>& policies) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(config_text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error&) {
        return config_text;  // let the library report the parse error
    }
    j["policies"] = policies;
    return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiered-memory training-iteration simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string anchors_path;
    std::string format = "csv";
    std::string out_path;
    std::vector<std::string> policies;

    auto* run_cmd = app.add_subcommand("run", "simulate the scenario sweep and report records");
    run_cmd->add_option("--config", config_path, "scenario config file (JSON)")->required();
    run_cmd->add_option("--policy", policies,
                        "override the config's policy list (repeatable)");
    run_cmd->add_option("--format", format, "csv | jsonl | table")->capture_default_str();
    run_cmd->add_option("--out", out_path, "write the report here instead of stdout");

    auto* plan_cmd = app.add_subcommand("plan", "print placement plans without simulating");
    plan_cmd->add_option("--config", config_path, "scenario config file (JSON)")->required();

    auto* cal_cmd = app.add_subcommand("calibrate", "fit free parameters against anchors");
    cal_cmd->add_option("--config", config_path, "scenario config file (JSON)")->required();
    cal_cmd->add_option("--anchors", anchors_path, "anchors file (JSON)")->required();

    auto* presets_cmd = app.add_subcommand("presets", "list built-in presets and defaults");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        std::string text = read_file(config_path);
        if (!policies.empty()) text = override_policies(text, policies);
        ConfigHandle cfg;
        if (tiersim_config_from_json(text.c_str(), &cfg.ptr) != TIERSIM_OK) return die("config");
        size_t runs = 0;
        tiersim_config_run_count(cfg.ptr, &runs);
        std::cerr << "sweep: " << runs << " runs\n";
        ResultHandle result;
        if (tiersim_run(cfg.ptr, &result.ptr) != TIERSIM_OK) return die("run");
        StringHandle text_out;
        if (tiersim_result_render(result.ptr, format.c_str(), &text_out.ptr) != TIERSIM_OK)
            return die("render");
        return write_output(text_out.ptr, out_path);
    }

    if (plan_cmd->parsed()) {
        ConfigHandle cfg;
        if (tiersim_config_from_file(config_path.c_str(), &cfg.ptr) != TIERSIM_OK)
            return die("config");
        StringHandle text_out;
        if (tiersim_plan_text(cfg.ptr, &text_out.ptr) != TIERSIM_OK) return die("plan");
        std::cout << text_out.ptr;
        return 0;
    }

    if (cal_cmd->parsed()) {
        ConfigHandle cfg;
        if (tiersim_config_from_file(config_path.c_str(), &cfg.ptr) != TIERSIM_OK)
            return die("config");
        std::string anchors = read_file(anchors_path);
        StringHandle text_out;
        if (tiersim_calibrate(cfg.ptr, anchors.c_str(), &text_out.ptr) != TIERSIM_OK)
            return die("calibrate");
        std::cout << text_out.ptr;
        return 0;
    }

    if (presets_cmd->parsed()) {
        StringHandle text_out;
        if (tiersim_presets(&text_out.ptr) != TIERSIM_OK) return die("presets");
        std::cout << text_out.ptr;
        return 0;
    }

    return 0;
}
