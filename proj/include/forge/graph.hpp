#pragma once

#include <string>
#include <vector>

#include "forge/param_store.hpp"
#include "forge/tensor.hpp"

namespace forge {

// Tape-based reverse-mode autodiff over rank-1/2 tensors. Nodes are
// appended in topological order; one backward pass walks the tape in
// reverse. Every kernel checks its output for NaN/Inf.
class Graph {
public:
    using NodeId = int;

    enum class OpKind {
        Input,
        Param,
        MatMul,
        BiasAdd,
        Tanh,
        Relu,
        EmbedRow,
        MeanPool,
        ConcatCols,
        RepeatRows,
        SoftmaxXent,
    };

    // Leaves.
    NodeId input(Tensor value);
    NodeId param(const std::string& name, const Tensor& value);

    // Kernels.
    NodeId matmul(NodeId a, NodeId b);
    NodeId bias_add(NodeId x, NodeId bias);          // bias: rank-1 or 1 x C, broadcast over rows
    NodeId tanh(NodeId x);
    NodeId relu(NodeId x);
    NodeId embed_row(NodeId table, std::size_t row); // 1 x C slice of a table
    NodeId mean_pool(NodeId x);                      // R x C -> 1 x C
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId repeat_rows(NodeId x, std::size_t n);     // 1 x C -> n x C
    // Mean over rows of (logsumexp(row) - row[target]); returns a scalar.
    NodeId softmax_xent(NodeId logits, std::vector<int> targets);

    const Tensor& value(NodeId id) const { return nodes_[size_t(id)].value; }
    const Tensor& grad(NodeId id) const { return nodes_[size_t(id)].grad; }

    // Seeds d(loss)/d(loss)=1 and propagates. Errors on a non-scalar
    // loss and on a second call without a new graph.
    void backward(NodeId loss);

    // Add scale * d(loss)/d(param) into the gradient buffers of every
    // Param node, matched to the store by name.
    void accumulate_param_grads(const ParameterStore& store, Gradients& out, double scale = 1.0) const;

private:
    struct Node {
        OpKind kind;
        std::vector<NodeId> inputs;
        Tensor value;
        Tensor grad;               // allocated during backward
        std::string param_name;    // Param only
        std::size_t row = 0;       // EmbedRow / RepeatRows
        std::vector<int> targets;  // SoftmaxXent
    };

    NodeId push(Node n, const char* kernel);
    void check_id(NodeId id) const;
    void backprop_node(NodeId id);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace forge
