#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "tiersim/tiersim.h"

namespace {

const char* kConfig = R"({
  "model": {"preset": "7B"},
  "training": {"num_gpus": 1, "batch": 4, "context": 4096},
  "topology": {"preset": "config-a"},
  "policies": [
    {"policy": "dram-only", "baseline": true},
    {"policy": "cxl-aware"}
  ],
  "sweep": {"context": [4096, 8192]}
})";

}  // namespace

TEST_CASE("config round trip, run, render") {
    tiersim_config* cfg = nullptr;
    REQUIRE(tiersim_config_from_json(kConfig, &cfg) == TIERSIM_OK);
    REQUIRE(cfg != nullptr);

    size_t runs = 0;
    CHECK(tiersim_config_run_count(cfg, &runs) == TIERSIM_OK);
    CHECK(runs == 4);

    tiersim_result* result = nullptr;
    REQUIRE(tiersim_run(cfg, &result) == TIERSIM_OK);
    size_t count = 0;
    CHECK(tiersim_result_count(result, &count) == TIERSIM_OK);
    CHECK(count == 4);

    char* csv = nullptr;
    REQUIRE(tiersim_result_render(result, "csv", &csv) == TIERSIM_OK);
    CHECK(std::string(csv).find("model,total_params") == 0);
    tiersim_string_free(csv);

    char* table = nullptr;
    REQUIRE(tiersim_result_render(result, "table", &table) == TIERSIM_OK);
    CHECK(std::string(table).find("cxl-aware") != std::string::npos);
    tiersim_string_free(table);

    tiersim_result_free(result);
    tiersim_config_free(cfg);
}

TEST_CASE("parse failures set the status and last_error") {
    tiersim_config* cfg = nullptr;
    CHECK(tiersim_config_from_json("{broken", &cfg) == TIERSIM_ERR_PARSE);
    CHECK(cfg == nullptr);
    CHECK(std::strlen(tiersim_last_error()) > 0);

    CHECK(tiersim_config_from_json(nullptr, &cfg) == TIERSIM_ERR_INVALID_ARG);

    const char* bad_topo = R"({
      "model": {"preset": "7B"},
      "training": {"num_gpus": 1, "batch": 1, "context": 128},
      "topology": {"preset": "config-a", "cxl_latency_ns": 500}
    })";
    CHECK(tiersim_config_from_json(bad_topo, &cfg) == TIERSIM_ERR_VALIDATION);
}

TEST_CASE("unknown render format is an invalid argument") {
    tiersim_config* cfg = nullptr;
    REQUIRE(tiersim_config_from_json(kConfig, &cfg) == TIERSIM_OK);
    tiersim_result* result = nullptr;
    REQUIRE(tiersim_run(cfg, &result) == TIERSIM_OK);
    char* out = nullptr;
    CHECK(tiersim_result_render(result, "yaml", &out) == TIERSIM_ERR_INVALID_ARG);
    CHECK(out == nullptr);
    tiersim_result_free(result);
    tiersim_config_free(cfg);
}

TEST_CASE("plan text and presets come back as strings") {
    tiersim_config* cfg = nullptr;
    REQUIRE(tiersim_config_from_json(kConfig, &cfg) == TIERSIM_OK);
    char* plan = nullptr;
    REQUIRE(tiersim_plan_text(cfg, &plan) == TIERSIM_OK);
    CHECK(std::string(plan).find("footprint") != std::string::npos);
    tiersim_string_free(plan);
    tiersim_config_free(cfg);

    char* presets = nullptr;
    REQUIRE(tiersim_presets(&presets) == TIERSIM_OK);
    CHECK(std::string(presets).find("config-b") != std::string::npos);
    tiersim_string_free(presets);
}

TEST_CASE("calibrate through the C surface") {
    tiersim_config* cfg = nullptr;
    REQUIRE(tiersim_config_from_json(kConfig, &cfg) == TIERSIM_OK);
    const char* anchors = R"({
      "anchors": [{"name": "dual", "kind": "aic_aggregate", "flows": 2,
                   "target": 26.8435456e9, "tolerance": 0.1}],
      "free_params": []
    })";
    char* report = nullptr;
    REQUIRE(tiersim_calibrate(cfg, anchors, &report) == TIERSIM_OK);
    CHECK(std::string(report).find("max_residual") != std::string::npos);
    tiersim_string_free(report);
    tiersim_config_free(cfg);

    CHECK(tiersim_calibrate(nullptr, anchors, &report) == TIERSIM_ERR_INVALID_ARG);
}

TEST_CASE("version string present") {
    CHECK(std::strlen(tiersim_version()) > 0);
}
