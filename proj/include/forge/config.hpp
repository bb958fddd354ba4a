#pragma once

#include <cstdint>
#include <string>

#include "forge/data.hpp"
#include "forge/model.hpp"
#include "forge/pipelines.hpp"

namespace forge {

// Everything a run needs, parsed from a plain `key = value` file.
// Unknown keys are a hard error.
struct ExperimentConfig {
    RunConfig run;
    RegistryConfig registry;
    int hidden_dim = 48;
    int num_trunk_layers = 2;
    int task_embedding_dim = 8;
    int max_seq_len = 64;

    // Derived model config (vocab and task count come from the registry).
    ModelConfig model(const TaskRegistry& reg) const;

    // Canonical serialization; stable key order, used for hashing and
    // the checkpoint config echo.
    std::string echo() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

uint64_t fnv1a_hash(const std::string& text);

}  // namespace forge
