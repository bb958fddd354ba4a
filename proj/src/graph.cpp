#include "forge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace forge {

namespace {

std::string shape_msg(const char* kernel, const Tensor& a, const Tensor& b) {
    std::ostringstream os;
    os << kernel << ": incompatible shapes " << a.shape_str() << " and " << b.shape_str();
    return os.str();
}

}  // namespace

Graph::NodeId Graph::push(Node n, const char* kernel) {
    if (!n.value.all_finite())
        throw NumericError(std::string(kernel) + ": non-finite output");
    nodes_.push_back(std::move(n));
    return NodeId(nodes_.size() - 1);
}

void Graph::check_id(NodeId id) const {
    if (id < 0 || size_t(id) >= nodes_.size()) throw ShapeError("graph: bad node id");
}

Graph::NodeId Graph::input(Tensor value) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(value);
    return push(std::move(n), "input");
}

Graph::NodeId Graph::param(const std::string& name, const Tensor& value) {
    Node n;
    n.kind = OpKind::Param;
    n.value = value;
    n.param_name = name;
    return push(std::move(n), "param");
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& A = nodes_[size_t(a)].value;
    const Tensor& B = nodes_[size_t(b)].value;
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
        throw ShapeError(shape_msg("matmul", A, B));
    Tensor out = Tensor::zeros({A.rows(), B.cols()});
    const std::size_t R = A.rows(), K = A.cols(), C = B.cols();
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k) {
            const double av = A.at(r, k);
            if (av == 0.0) continue;
            for (std::size_t c = 0; c < C; ++c) out.at(r, c) += av * B.at(k, c);
        }
    Node n;
    n.kind = OpKind::MatMul;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "matmul");
}

Graph::NodeId Graph::bias_add(NodeId x, NodeId bias) {
    check_id(x);
    check_id(bias);
    const Tensor& X = nodes_[size_t(x)].value;
    const Tensor& B = nodes_[size_t(bias)].value;
    if (X.rank() != 2 || B.size() != X.cols())
        throw ShapeError(shape_msg("bias_add", X, B));
    Tensor out = X;
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) out.at(r, c) += B.values[c];
    Node n;
    n.kind = OpKind::BiasAdd;
    n.inputs = {x, bias};
    n.value = std::move(out);
    return push(std::move(n), "bias_add");
}

Graph::NodeId Graph::tanh(NodeId x) {
    check_id(x);
    Tensor out = nodes_[size_t(x)].value;
    for (double& v : out.values) v = std::tanh(v);
    Node n;
    n.kind = OpKind::Tanh;
    n.inputs = {x};
    n.value = std::move(out);
    return push(std::move(n), "tanh");
}

Graph::NodeId Graph::relu(NodeId x) {
    check_id(x);
    Tensor out = nodes_[size_t(x)].value;
    for (double& v : out.values) v = v > 0.0 ? v : 0.0;
    Node n;
    n.kind = OpKind::Relu;
    n.inputs = {x};
    n.value = std::move(out);
    return push(std::move(n), "relu");
}

Graph::NodeId Graph::embed_row(NodeId table, std::size_t row) {
    check_id(table);
    const Tensor& T = nodes_[size_t(table)].value;
    if (T.rank() != 2 || row >= T.rows())
        throw ShapeError("embed_row: row " + std::to_string(row) + " out of range for " + T.shape_str());
    Tensor out = Tensor::zeros({1, T.cols()});
    for (std::size_t c = 0; c < T.cols(); ++c) out.at(0, c) = T.at(row, c);
    Node n;
    n.kind = OpKind::EmbedRow;
    n.inputs = {table};
    n.value = std::move(out);
    n.row = row;
    return push(std::move(n), "embed_row");
}

Graph::NodeId Graph::mean_pool(NodeId x) {
    check_id(x);
    const Tensor& X = nodes_[size_t(x)].value;
    if (X.rank() != 2) throw ShapeError("mean_pool: expected rank-2, got " + X.shape_str());
    Tensor out = Tensor::zeros({1, X.cols()});
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) out.at(0, c) += X.at(r, c);
    for (double& v : out.values) v /= double(X.rows());
    Node n;
    n.kind = OpKind::MeanPool;
    n.inputs = {x};
    n.value = std::move(out);
    return push(std::move(n), "mean_pool");
}

Graph::NodeId Graph::concat_cols(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& A = nodes_[size_t(a)].value;
    const Tensor& B = nodes_[size_t(b)].value;
    if (A.rank() != 2 || B.rank() != 2 || A.rows() != B.rows())
        throw ShapeError(shape_msg("concat_cols", A, B));
    Tensor out = Tensor::zeros({A.rows(), A.cols() + B.cols()});
    for (std::size_t r = 0; r < A.rows(); ++r) {
        for (std::size_t c = 0; c < A.cols(); ++c) out.at(r, c) = A.at(r, c);
        for (std::size_t c = 0; c < B.cols(); ++c) out.at(r, A.cols() + c) = B.at(r, c);
    }
    Node n;
    n.kind = OpKind::ConcatCols;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "concat_cols");
}

Graph::NodeId Graph::repeat_rows(NodeId x, std::size_t count) {
    check_id(x);
    const Tensor& X = nodes_[size_t(x)].value;
    if (X.rank() != 2 || X.rows() != 1 || count == 0)
        throw ShapeError("repeat_rows: expected 1 x C input, got " + X.shape_str());
    Tensor out = Tensor::zeros({count, X.cols()});
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) out.at(r, c) = X.at(0, c);
    Node n;
    n.kind = OpKind::RepeatRows;
    n.inputs = {x};
    n.value = std::move(out);
    n.row = count;
    return push(std::move(n), "repeat_rows");
}

Graph::NodeId Graph::softmax_xent(NodeId logits, std::vector<int> targets) {
    check_id(logits);
    const Tensor& L = nodes_[size_t(logits)].value;
    if (L.rank() != 2 || targets.size() != L.rows())
        throw ShapeError("softmax_xent: " + std::to_string(targets.size()) + " targets for logits " + L.shape_str());
    for (int t : targets)
        if (t < 0 || size_t(t) >= L.cols())
            throw ShapeError("softmax_xent: target " + std::to_string(t) + " outside vocab of " + std::to_string(L.cols()));
    double loss = 0.0;
    for (std::size_t r = 0; r < L.rows(); ++r) {
        double mx = L.at(r, 0);
        for (std::size_t c = 1; c < L.cols(); ++c) mx = std::max(mx, L.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < L.cols(); ++c) sum += std::exp(L.at(r, c) - mx);
        loss += mx + std::log(sum) - L.at(r, size_t(targets[r]));
    }
    loss /= double(L.rows());
    Node n;
    n.kind = OpKind::SoftmaxXent;
    n.inputs = {logits};
    n.value = Tensor::scalar(loss);
    n.targets = std::move(targets);
    return push(std::move(n), "softmax_xent");
}

void Graph::backward(NodeId loss) {
    check_id(loss);
    if (backward_done_) throw NumericError("backward: graph already consumed; build a new forward pass");
    if (nodes_[size_t(loss)].value.size() != 1)
        throw ShapeError("backward: loss must be a scalar, got " + nodes_[size_t(loss)].value.shape_str());
    backward_done_ = true;
    for (auto& n : nodes_) {
        n.grad = n.value;
        std::fill(n.grad.values.begin(), n.grad.values.end(), 0.0);
    }
    nodes_[size_t(loss)].grad.values[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) backprop_node(id);
}

void Graph::backprop_node(NodeId id) {
    Node& n = nodes_[size_t(id)];
    bool any = false;
    for (double g : n.grad.values)
        if (g != 0.0) { any = true; break; }
    if (!any) return;
    switch (n.kind) {
        case OpKind::Input:
        case OpKind::Param:
            break;
        case OpKind::MatMul: {
            Node& A = nodes_[size_t(n.inputs[0])];
            Node& B = nodes_[size_t(n.inputs[1])];
            const std::size_t R = A.value.rows(), K = A.value.cols(), C = B.value.cols();
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t k = 0; k < K; ++k) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < C; ++c) acc += n.grad.at(r, c) * B.value.at(k, c);
                    A.grad.at(r, k) += acc;
                }
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (std::size_t r = 0; r < R; ++r) acc += A.value.at(r, k) * n.grad.at(r, c);
                    B.grad.at(k, c) += acc;
                }
            break;
        }
        case OpKind::BiasAdd: {
            Node& X = nodes_[size_t(n.inputs[0])];
            Node& B = nodes_[size_t(n.inputs[1])];
            for (std::size_t i = 0; i < X.grad.size(); ++i) X.grad.values[i] += n.grad.values[i];
            const std::size_t C = X.value.cols();
            for (std::size_t r = 0; r < X.value.rows(); ++r)
                for (std::size_t c = 0; c < C; ++c) B.grad.values[c] += n.grad.at(r, c);
            break;
        }
        case OpKind::Tanh: {
            Node& X = nodes_[size_t(n.inputs[0])];
            for (std::size_t i = 0; i < X.grad.size(); ++i) {
                const double y = n.value.values[i];
                X.grad.values[i] += n.grad.values[i] * (1.0 - y * y);
            }
            break;
        }
        case OpKind::Relu: {
            Node& X = nodes_[size_t(n.inputs[0])];
            for (std::size_t i = 0; i < X.grad.size(); ++i)
                if (X.value.values[i] > 0.0) X.grad.values[i] += n.grad.values[i];
            break;
        }
        case OpKind::EmbedRow: {
            Node& T = nodes_[size_t(n.inputs[0])];
            for (std::size_t c = 0; c < T.value.cols(); ++c) T.grad.at(n.row, c) += n.grad.at(0, c);
            break;
        }
        case OpKind::MeanPool: {
            Node& X = nodes_[size_t(n.inputs[0])];
            const double inv = 1.0 / double(X.value.rows());
            for (std::size_t r = 0; r < X.value.rows(); ++r)
                for (std::size_t c = 0; c < X.value.cols(); ++c) X.grad.at(r, c) += inv * n.grad.at(0, c);
            break;
        }
        case OpKind::ConcatCols: {
            Node& A = nodes_[size_t(n.inputs[0])];
            Node& B = nodes_[size_t(n.inputs[1])];
            for (std::size_t r = 0; r < A.value.rows(); ++r) {
                for (std::size_t c = 0; c < A.value.cols(); ++c) A.grad.at(r, c) += n.grad.at(r, c);
                for (std::size_t c = 0; c < B.value.cols(); ++c) B.grad.at(r, c) += n.grad.at(r, A.value.cols() + c);
            }
            break;
        }
        case OpKind::RepeatRows: {
            Node& X = nodes_[size_t(n.inputs[0])];
            for (std::size_t r = 0; r < n.value.rows(); ++r)
                for (std::size_t c = 0; c < X.value.cols(); ++c) X.grad.at(0, c) += n.grad.at(r, c);
            break;
        }
        case OpKind::SoftmaxXent: {
            Node& L = nodes_[size_t(n.inputs[0])];
            const double up = n.grad.values[0] / double(L.value.rows());
            for (std::size_t r = 0; r < L.value.rows(); ++r) {
                double mx = L.value.at(r, 0);
                for (std::size_t c = 1; c < L.value.cols(); ++c) mx = std::max(mx, L.value.at(r, c));
                double sum = 0.0;
                for (std::size_t c = 0; c < L.value.cols(); ++c) sum += std::exp(L.value.at(r, c) - mx);
                for (std::size_t c = 0; c < L.value.cols(); ++c) {
                    double p = std::exp(L.value.at(r, c) - mx) / sum;
                    L.grad.at(r, c) += up * (p - (size_t(n.targets[r]) == c ? 1.0 : 0.0));
                }
            }
            break;
        }
    }
}

void Graph::accumulate_param_grads(const ParameterStore& store, Gradients& out, double scale) const {
    if (!backward_done_) throw NumericError("accumulate_param_grads: backward has not run");
    for (const auto& n : nodes_) {
        if (n.kind != OpKind::Param) continue;
        const std::size_t idx = store.index_of(n.param_name);
        auto& dst = out.by_entry[idx];
        if (dst.size() != n.grad.size()) throw ShapeError("gradient size mismatch for " + n.param_name);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * n.grad.values[i];
    }
}

}  // namespace forge
