#include "tiersim/tiersim.h"

#include <cstring>
#include <new>
#include <string>

#include "common.hpp"
#include "scenario.hpp"

using namespace tiersim;

struct tiersim_config {
    ScenarioConfig cfg;
};

struct tiersim_result {
    std::vector<RunRecord> records;
};

namespace {

thread_local std::string g_last_error;

tiersim_status fail(tiersim_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
tiersim_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        return fail(TIERSIM_ERR_PARSE, e.what());
    } catch (const ValidationError& e) {
        return fail(TIERSIM_ERR_VALIDATION, e.what());
    } catch (const std::exception& e) {
        return fail(TIERSIM_ERR_RUNTIME, e.what());
    }
}

}  // namespace

extern "C" {

const char* tiersim_last_error(void) { return g_last_error.c_str(); }

const char* tiersim_version(void) { return "0.1.0"; }

tiersim_status tiersim_config_from_json(const char* json_text, tiersim_config** out) {
    if (!json_text || !out) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto* handle = new tiersim_config{load_config(json_text)};
        *out = handle;
        return TIERSIM_OK;
    });
}

tiersim_status tiersim_config_from_file(const char* path, tiersim_config** out) {
    if (!path || !out) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto* handle = new tiersim_config{load_config_file(path)};
        *out = handle;
        return TIERSIM_OK;
    });
}

void tiersim_config_free(tiersim_config* config) { delete config; }

tiersim_status tiersim_config_run_count(const tiersim_config* config, size_t* out) {
    if (!config || !out) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out = sweep_size(config->cfg);
    return TIERSIM_OK;
}

tiersim_status tiersim_run(const tiersim_config* config, tiersim_result** out) {
    if (!config || !out) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto* result = new tiersim_result{run(config->cfg)};
        *out = result;
        return TIERSIM_OK;
    });
}

void tiersim_result_free(tiersim_result* result) { delete result; }

tiersim_status tiersim_result_count(const tiersim_result* result, size_t* out) {
    if (!result || !out) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out = result->records.size();
    return TIERSIM_OK;
}

tiersim_status tiersim_result_render(const tiersim_result* result, const char* format,
                                     char** out_text) {
    if (!result || !format || !out_text) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out_text = nullptr;
    auto fmt = format_from_name(format);
    if (!fmt)
        return fail(TIERSIM_ERR_INVALID_ARG,
                    std::string("unknown format '") + format + "' (want csv, jsonl, or table)");
    return guarded([&] {
        *out_text = dup_string(render(result->records, *fmt));
        return *out_text ? TIERSIM_OK : fail(TIERSIM_ERR_RUNTIME, "out of memory");
    });
}

tiersim_status tiersim_plan_text(const tiersim_config* config, char** out_text) {
    if (!config || !out_text) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out_text = nullptr;
    return guarded([&] {
        *out_text = dup_string(plan_text(config->cfg));
        return *out_text ? TIERSIM_OK : fail(TIERSIM_ERR_RUNTIME, "out of memory");
    });
}

tiersim_status tiersim_calibrate(const tiersim_config* config, const char* anchors_json,
                                 char** out_text) {
    if (!config || !anchors_json || !out_text) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out_text = nullptr;
    return guarded([&] {
        *out_text = dup_string(calibrate_text(config->cfg, anchors_json));
        return *out_text ? TIERSIM_OK : fail(TIERSIM_ERR_RUNTIME, "out of memory");
    });
}

tiersim_status tiersim_presets(char** out_text) {
    if (!out_text) return fail(TIERSIM_ERR_INVALID_ARG, "null argument");
    *out_text = nullptr;
    return guarded([&] {
        *out_text = dup_string(presets_text());
        return *out_text ? TIERSIM_OK : fail(TIERSIM_ERR_RUNTIME, "out of memory");
    });
}

void tiersim_string_free(char* text) { delete[] text; }

}  // extern "C"
