#include "workload.hpp"

#include "common.hpp"

namespace tiersim {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_mul_overflow(a, b, &out))
        throw OverflowError("byte counter overflow in component size computation");
    return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_add_overflow(a, b, &out))
        throw OverflowError("byte counter overflow in footprint total");
    return out;
}

}  // namespace

ComponentClass classify(Component c) {
    switch (c) {
        case Component::ParamsBf16:
        case Component::GradsBf16:
        case Component::Activations:
            return ComponentClass::GpuTransfer;
        default:
            return ComponentClass::CpuCompute;
    }
}

std::string to_string(Component c) {
    switch (c) {
        case Component::ParamsBf16: return "params_bf16";
        case Component::GradsBf16: return "grads_bf16";
        case Component::Activations: return "activations";
        case Component::ParamsFp32: return "params_fp32";
        case Component::GradsFp32: return "grads_fp32";
        case Component::OptimStates: return "optim_states";
    }
    return "?";
}

std::optional<Component> component_from_name(const std::string& name) {
    for (Component c : kAllComponents)
        if (to_string(c) == name) return c;
    return std::nullopt;
}

void validate(const ModelSpec& model) {
    if (model.total_params == 0) throw ValidationError("model: total_params must be > 0");
    if (model.num_blocks == 0) throw ValidationError("model: num_blocks must be > 0");
    if (model.hidden_size == 0) throw ValidationError("model: hidden_size must be > 0");
    if (model.total_params < checked_mul(model.num_blocks, model.hidden_size))
        throw ValidationError("model: total_params < num_blocks * hidden_size");
}

void validate(const TrainingConfig& train) {
    if (train.num_gpus == 0) throw ValidationError("training: num_gpus must be > 0");
    if (train.batch == 0) throw ValidationError("training: batch must be > 0");
    if (train.context == 0) throw ValidationError("training: context must be > 0");
}

std::uint64_t component_bytes(const ModelSpec& model, const TrainingConfig& train, Component c) {
    switch (c) {
        case Component::ParamsBf16:
        case Component::GradsBf16:
            return checked_mul(kBytesBf16, model.total_params);
        case Component::ParamsFp32:
        case Component::GradsFp32:
            return checked_mul(kBytesFp32, model.total_params);
        case Component::OptimStates:
            return checked_mul(8, model.total_params);
        case Component::Activations: {
            std::uint64_t v = checked_mul(train.num_gpus, train.batch);
            v = checked_mul(v, train.context);
            v = checked_mul(v, model.num_blocks);
            v = checked_mul(v, model.hidden_size);
            return checked_mul(kBytesBf16, v);
        }
    }
    throw ValidationError("unknown component");
}

FootprintReport footprint(const ModelSpec& model, const TrainingConfig& train) {
    FootprintReport report;
    for (Component c : kAllComponents) {
        std::uint64_t b = component_bytes(model, train, c);
        report.bytes[c] = b;
        report.total = checked_add(report.total, b);
    }
    return report;
}

PerBlockVolumes per_block_volumes(const ModelSpec& model, const TrainingConfig& train) {
    PerBlockVolumes v;
    std::uint64_t per_block_params = model.total_params / model.num_blocks;
    std::uint64_t remainder_params = model.total_params % model.num_blocks;
    v.param_bf16_per_block = checked_mul(kBytesBf16, per_block_params);
    v.grad_bf16_per_block = v.param_bf16_per_block;
    v.param_remainder_bytes = checked_mul(kBytesBf16, remainder_params);
    std::uint64_t act = checked_mul(train.batch, train.context);
    act = checked_mul(act, model.hidden_size);
    v.activation_per_block_per_gpu = checked_mul(kBytesBf16, act);
    return v;
}

std::uint64_t param_bytes_for_block(const PerBlockVolumes& v, std::uint64_t block,
                                    std::uint64_t num_blocks) {
    std::uint64_t bytes = v.param_bf16_per_block;
    if (block + 1 == num_blocks) bytes += v.param_remainder_bytes;
    return bytes;
}

std::optional<ModelSpec> model_preset(const std::string& name) {
    for (const auto& m : model_presets())
        if (m.name == name) return m;
    return std::nullopt;
}

std::vector<ModelSpec> model_presets() {
    return {
        {"7B", 7'600'000'000ull, 28, 3584, true},
        {"12B", 12'200'000'000ull, 40, 5120, true},
    };
}

}  // namespace tiersim
