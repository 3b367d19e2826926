#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tiersim {

constexpr std::uint64_t kBytesBf16 = 2;
constexpr std::uint64_t kBytesFp32 = 4;

struct ModelSpec {
    std::string name;            // informational
    std::uint64_t total_params = 0;  // P
    std::uint64_t num_blocks = 0;    // L
    std::uint64_t hidden_size = 0;   // H
    bool approximate = false;        // true for named presets
};

struct TrainingConfig {
    std::uint32_t num_gpus = 1;  // Ng
    std::uint64_t batch = 1;     // B, per GPU
    std::uint64_t context = 1;   // C, tokens
};

// The six offloaded components. The first three move between host and GPU
// every iteration; the last three are touched by the CPU optimizer.
enum class Component {
    ParamsBf16,
    GradsBf16,
    Activations,
    ParamsFp32,
    GradsFp32,
    OptimStates,
};

enum class ComponentClass { GpuTransfer, CpuCompute };

constexpr Component kAllComponents[] = {
    Component::ParamsBf16, Component::GradsBf16,  Component::Activations,
    Component::ParamsFp32, Component::GradsFp32,  Component::OptimStates,
};

ComponentClass classify(Component c);
std::string to_string(Component c);
std::optional<Component> component_from_name(const std::string& name);

struct FootprintReport {
    std::map<Component, std::uint64_t> bytes;
    std::uint64_t total = 0;
};

void validate(const ModelSpec& model);
void validate(const TrainingConfig& train);

// Exact integer byte count of one component. Throws OverflowError instead of
// wrapping.
std::uint64_t component_bytes(const ModelSpec& model, const TrainingConfig& train, Component c);

FootprintReport footprint(const ModelSpec& model, const TrainingConfig& train);

struct PerBlockVolumes {
    std::uint64_t param_bf16_per_block = 0;        // uniform share, remainder on last block
    std::uint64_t grad_bf16_per_block = 0;
    std::uint64_t activation_per_block_per_gpu = 0;
    std::uint64_t param_remainder_bytes = 0;       // extra bytes carried by the last block
};

PerBlockVolumes per_block_volumes(const ModelSpec& model, const TrainingConfig& train);

// Parameter bytes streamed for one block (the last block absorbs P mod L).
std::uint64_t param_bytes_for_block(const PerBlockVolumes& v, std::uint64_t block,
                                    std::uint64_t num_blocks);

// Named presets. L and H for the published models are not public; these are
// approximations and every field can be overridden in the scenario config.
std::optional<ModelSpec> model_preset(const std::string& name);
std::vector<ModelSpec> model_presets();

}  // namespace tiersim
