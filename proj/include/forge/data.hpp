#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "forge/task.hpp"

namespace forge {

// One example: frames are L x input_dim; targets hold a single class id
// for classification or L token ids for sequence tasks (global vocab).
struct Example {
    std::string task_id;
    std::vector<std::vector<double>> frames;
    std::vector<int> targets;
};

using Dataset = std::vector<Example>;

enum class Split { Train = 0, Eval = 1, Continual = 2 };

struct DatasetSpec {
    TaskKind kind = TaskKind::Classification;
    int num_targets = 0;    // classes, or token alphabet size
    int target_offset = 0;  // into the shared vocab
    int input_dim = 0;
    int train_size = 0;
    int eval_size = 0;
    int continual_size = 0;
    int len_min = 0;
    int len_max = 0;
    double noise = 0.0;
    uint64_t seed = 0;
    // Tag-transduction variant: even positions emit a tag token derived
    // from the input token, odd positions emit the token itself.
    bool tag_style = false;
    int tag_offset = 0;
    int num_tags = 0;
    // Domain shift applied to the continual split only: a fixed unit
    // offset direction (derived from the seed) scaled by this magnitude
    // is added to every frame. 0 keeps all splits identically distributed.
    double continual_shift = 0.0;

    void validate() const;
};

Dataset gen_classification(const DatasetSpec& spec, const std::string& task_id, Split split);
Dataset gen_transduction(const DatasetSpec& spec, const std::string& task_id, Split split);
Dataset generate(const DatasetSpec& spec, const std::string& task_id, Split split);

// Class prototype directions used by gen_classification (unit vectors).
std::vector<std::vector<double>> class_prototypes(const DatasetSpec& spec);

std::size_t edit_distance(const std::vector<int>& ref, const std::vector<int>& hyp);
double token_error_rate(const std::vector<std::vector<int>>& refs,
                        const std::vector<std::vector<int>>& hyps);

Dataset upsample(const Dataset& data, int factor);

// Line-oriented text export: task id <TAB> frames (floats, frames
// separated by '|') <TAB> target ids.
void export_dataset(const Dataset& data, std::ostream& os);
Dataset import_dataset(std::istream& is);

// Default synthetic task registries (3-task and 7-task suites).
struct RegistryConfig {
    int num_tasks = 3;  // 3 or 7
    int input_dim = 16;
    double noise_cls = 1.0;
    double noise_seq = 0.5;
    int train_size = 600;
    int cls_a_train_size = 120;
    int eval_size = 200;
    int continual_size = 600;
    int len_min = 6;
    int len_max = 12;
    int upsample_cls_a = 10;
    double continual_shift = 0.0;
    uint64_t seed = 0;
};

struct TaskRegistry {
    std::vector<TaskSpec> tasks;
    std::vector<DatasetSpec> data_specs;  // parallel to tasks
    int vocab_size = 0;

    const TaskSpec& by_id(const std::string& id) const;
    int index_of(const std::string& id) const;
};

TaskRegistry build_registry(const RegistryConfig& cfg);

}  // namespace forge
