#pragma once

#include <cstdint>
#include <vector>

#include "forge/data.hpp"
#include "forge/graph.hpp"
#include "forge/param_store.hpp"
#include "forge/task.hpp"

namespace forge {

struct ModelConfig {
    int input_dim = 16;
    int hidden_dim = 48;
    int num_trunk_layers = 2;
    int vocab_size = 32;
    int task_embedding_dim = 8;
    int max_seq_len = 64;
    int num_tasks = 3;
    uint64_t seed = 0;

    void validate() const;
};

// Shared-trunk multi-task model. The task embedding row is concatenated
// to every input frame; trunk layers are fully connected with tanh per
// timestep. Classification reads a mean-pooled head, sequence tasks a
// per-position head. Both heads emit the full shared vocabulary.
//
// Parameter names: task_embedding (non-prunable), trunk<i>/weight,
// trunk<i>/bias, cls_head/{weight,bias}, seq_head/{weight,bias}.
ParameterStore init_model_params(const ModelConfig& cfg);

// Builds the forward pass on the graph and returns the logits node:
// one row for classification, len(frames) rows for sequence tasks.
// theta_eff must already carry any mask product.
Graph::NodeId model_forward(Graph& g, const ModelConfig& cfg, const TaskSpec& task,
                            const std::vector<std::vector<double>>& frames,
                            const ParameterStore& theta_eff);

// forward + softmax cross-entropy against the example's targets.
Graph::NodeId model_loss(Graph& g, const ModelConfig& cfg, const TaskSpec& task,
                         const Example& ex, const ParameterStore& theta_eff);

// Classification: argmax over the task's label subset (global vocab id,
// ties toward the lower id). Sequence: per-position argmax over the full
// vocab, ties toward the lower token id.
std::vector<int> predict(const Tensor& logits, const TaskSpec& task);

// Accuracy in [0,1] for classification, corpus-level token error rate
// for sequence tasks. Errors on an empty dataset.
double evaluate(const ModelConfig& cfg, const ParameterStore& theta_eff, const TaskSpec& task,
                const Dataset& dataset);

// Uniform comparison scale: accuracy, or 1 - min(TER, 1).
double scalar_score(double metric, TaskKind kind);

}  // namespace forge
