#pragma once

#include <string>

#include "forge/config.hpp"
#include "forge/report.hpp"

namespace forge {

// Full comparison at one sparsity: dense training, task-specific and
// task-agnostic mask identification from the dense weights, then the
// multi-task, single-task and task-agnostic parameter updates.
struct ExperimentOutcome {
    TaskRegistry registry;
    std::vector<TaskData> data;
    ModelConfig model;

    DenseResult dense;
    MaskSet task_masks;
    MaskSet agnostic_mask;
    UpdateResult multi;
    SingleTaskResult single;
    UpdateResult agnostic;

    std::vector<ReportRow> rows;  // dense, multi-task, single-task, task-agnostic
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::string& experiment_id);

// Replicates a single shared mask into one owner per task so it can
// drive the per-task update schedule.
MaskSet replicate_agnostic(const PruningMask& m, const TaskRegistry& reg);

}  // namespace forge
