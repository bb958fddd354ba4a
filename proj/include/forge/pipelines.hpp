#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forge/data.hpp"
#include "forge/mask.hpp"
#include "forge/model.hpp"
#include "forge/param_store.hpp"

namespace forge {

struct RunConfig {
    double p = 0.2;
    int q = 2;
    int n1 = 200;
    int n2 = 20;
    int r = 40;
    double base_lr_dense = 3e-3;
    long warmup_dense = 100;
    double base_lr_identify = 1e-3;
    long warmup_identify = 100;
    double base_lr_update = 3e-4;
    long warmup_update = 100;
    double base_lr_continual = 1e-3;
    long warmup_continual = 50;
    int batch_size = 8;
    uint64_t seed = 0;
    int dense_steps = 3000;
    int eval_interval = 500;          // dense-training eval cadence, steps
    int eval_every_repeats = 1;       // parameter-update eval cadence, outer repeats
    int continual_steps = 1500;
    int continual_eval_interval = 0;  // 0 = one epoch over the continual pool
    bool continual_replace = false;   // default: new shard augments old data
    bool f32 = false;                 // checkpoint precision

    void validate() const;  // enforces n1 >= 10*n2 among others
};

// Per-task datasets, parallel to the registry's task order.
struct TaskData {
    Dataset train;
    Dataset eval;
    Dataset continual_shard;
};

std::vector<TaskData> materialize_datasets(const TaskRegistry& reg);

struct TrainingHistory {
    std::vector<std::string> task_ids;

    struct Record {
        long step = 0;
        std::string trained_task;
        std::vector<double> metrics;  // task-native metric per task
        double loss = 0.0;
    };
    std::vector<Record> records;
};

struct DenseResult {
    ParameterStore theta;
    TrainingHistory history;
    long optimizer_steps = 0;
};

// Mixture training with per-task upsampling; no masks.
DenseResult train_dense(const ModelConfig& model, const TaskRegistry& reg,
                        const std::vector<TaskData>& data, const RunConfig& run);

struct IdentifyResult {
    MaskSet masks;
    long optimizer_steps = 0;
};

// Iterative magnitude pruning with rewind: per round and per task, train
// n1 steps on the masked network from theta, prune p of the survivors
// globally, then reset theta to its entry value. theta is bit-identical
// on return; optimizer state is fresh for every segment.
IdentifyResult identify_masks(ParameterStore& theta, const ModelConfig& model, const TaskRegistry& reg,
                              const std::vector<TaskData>& data, const RunConfig& run);

// Same schedule with a single shared mask; each round trains one
// n1-step segment on the task mixture.
IdentifyResult identify_masks_task_agnostic(ParameterStore& theta, const ModelConfig& model,
                                            const TaskRegistry& reg, const std::vector<TaskData>& data,
                                            const RunConfig& run);

struct UpdateResult {
    ParameterStore theta;
    TrainingHistory history;
    long optimizer_steps = 0;
};

// Interleaved masked fine-tuning of one shared theta: r repeats of
// seeded-shuffled task visits, n2 steps each, gradients masked by the
// active task's mask. One shared optimizer across visits.
UpdateResult update_parameters(const ParameterStore& theta0, const MaskSet& masks, const ModelConfig& model,
                               const TaskRegistry& reg, const std::vector<TaskData>& data,
                               const RunConfig& run);

// Independent parameter copy per task, same schedule.
struct SingleTaskResult {
    std::vector<ParameterStore> thetas;         // per task
    std::vector<TrainingHistory> histories;
};
SingleTaskResult single_task_update(const ParameterStore& theta0, const MaskSet& masks,
                                    const ModelConfig& model, const TaskRegistry& reg,
                                    const std::vector<TaskData>& data, const RunConfig& run);

enum class ContinualMode { PrunedSubnetwork, DenseFull, DenseEncoderOnly };
ContinualMode continual_mode_from_string(const std::string& s);

// Additional training of one task on its continual shard. In pruned
// mode the target task's mask gates both forward and gradients; in
// encoder-only mode just the trunk weight matrices move. The history
// carries all tasks' scores at every checkpoint.
UpdateResult continual_learn(const ParameterStore& theta, const MaskSet* masks, const std::string& target_task,
                             ContinualMode mode, const ModelConfig& model, const TaskRegistry& reg,
                             const std::vector<TaskData>& data, const RunConfig& run);

// Per-task metrics; when masks are given, each task is scored on its
// own masked parameters.
std::vector<double> evaluate_all(const ModelConfig& model, const ParameterStore& theta,
                                 const TaskRegistry& reg, const std::vector<TaskData>& data,
                                 const MaskSet* masks);

}  // namespace forge
