#include "forge/model.hpp"

#include <cmath>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {

void ModelConfig::validate() const {
    if (input_dim <= 0 || hidden_dim <= 0 || num_trunk_layers <= 0 || vocab_size <= 0 ||
        task_embedding_dim <= 0 || max_seq_len <= 0 || num_tasks <= 0)
        throw ConfigError("model config: all extents must be positive");
}

namespace {

Tensor gaussian_tensor(std::vector<std::size_t> shape, double scale, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values) v = scale * rng.next_gaussian();
    return t;
}

}  // namespace

ParameterStore init_model_params(const ModelConfig& cfg) {
    cfg.validate();
    ParameterStore store;
    Rng rng = Rng::derive(cfg.seed, 0x90de1);

    store.add("task_embedding",
              gaussian_tensor({std::size_t(cfg.num_tasks), std::size_t(cfg.task_embedding_dim)}, 1.0, rng),
              /*prunable=*/false);

    std::size_t in_dim = std::size_t(cfg.input_dim + cfg.task_embedding_dim);
    for (int l = 0; l < cfg.num_trunk_layers; ++l) {
        const std::string prefix = "trunk" + std::to_string(l);
        const double scale = 1.0 / std::sqrt(double(in_dim));
        store.add(prefix + "/weight", gaussian_tensor({in_dim, std::size_t(cfg.hidden_dim)}, scale, rng), true);
        store.add(prefix + "/bias", Tensor::zeros({std::size_t(cfg.hidden_dim)}), true);
        in_dim = std::size_t(cfg.hidden_dim);
    }
    const double head_scale = 1.0 / std::sqrt(double(cfg.hidden_dim));
    store.add("cls_head/weight",
              gaussian_tensor({std::size_t(cfg.hidden_dim), std::size_t(cfg.vocab_size)}, head_scale, rng), true);
    store.add("cls_head/bias", Tensor::zeros({std::size_t(cfg.vocab_size)}), true);
    store.add("seq_head/weight",
              gaussian_tensor({std::size_t(cfg.hidden_dim), std::size_t(cfg.vocab_size)}, head_scale, rng), true);
    store.add("seq_head/bias", Tensor::zeros({std::size_t(cfg.vocab_size)}), true);
    return store;
}

Graph::NodeId model_forward(Graph& g, const ModelConfig& cfg, const TaskSpec& task,
                            const std::vector<std::vector<double>>& frames,
                            const ParameterStore& theta_eff) {
    if (frames.empty()) throw ShapeError("model_forward: empty input sequence");
    if (frames.size() > std::size_t(cfg.max_seq_len))
        throw ShapeError("model_forward: sequence length " + std::to_string(frames.size()) +
                         " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    if (task.specifier < 0 || task.specifier >= cfg.num_tasks)
        throw ConfigError("model_forward: unknown task specifier " + std::to_string(task.specifier));

    const std::size_t L = frames.size();
    Tensor x = Tensor::zeros({L, std::size_t(cfg.input_dim)});
    for (std::size_t r = 0; r < L; ++r) {
        if (frames[r].size() != std::size_t(cfg.input_dim))
            throw ShapeError("model_forward: frame width " + std::to_string(frames[r].size()) +
                             " does not match input_dim " + std::to_string(cfg.input_dim));
        for (std::size_t c = 0; c < std::size_t(cfg.input_dim); ++c) x.at(r, c) = frames[r][c];
    }

    auto X = g.input(std::move(x));
    auto emb_table = g.param("task_embedding", theta_eff.tensor("task_embedding"));
    auto emb = g.repeat_rows(g.embed_row(emb_table, std::size_t(task.specifier)), L);
    auto h = g.concat_cols(X, emb);

    for (int l = 0; l < cfg.num_trunk_layers; ++l) {
        const std::string prefix = "trunk" + std::to_string(l);
        auto w = g.param(prefix + "/weight", theta_eff.tensor(prefix + "/weight"));
        auto b = g.param(prefix + "/bias", theta_eff.tensor(prefix + "/bias"));
        h = g.tanh(g.bias_add(g.matmul(h, w), b));
    }

    if (task.kind == TaskKind::Classification) {
        auto pooled = g.mean_pool(h);
        auto w = g.param("cls_head/weight", theta_eff.tensor("cls_head/weight"));
        auto b = g.param("cls_head/bias", theta_eff.tensor("cls_head/bias"));
        return g.bias_add(g.matmul(pooled, w), b);
    }
    auto w = g.param("seq_head/weight", theta_eff.tensor("seq_head/weight"));
    auto b = g.param("seq_head/bias", theta_eff.tensor("seq_head/bias"));
    return g.bias_add(g.matmul(h, w), b);
}

Graph::NodeId model_loss(Graph& g, const ModelConfig& cfg, const TaskSpec& task,
                         const Example& ex, const ParameterStore& theta_eff) {
    auto logits = model_forward(g, cfg, task, ex.frames, theta_eff);
    return g.softmax_xent(logits, ex.targets);
}

std::vector<int> predict(const Tensor& logits, const TaskSpec& task) {
    std::vector<int> out;
    if (task.kind == TaskKind::Classification) {
        if (logits.rows() != 1) throw ShapeError("predict: classification logits must have one row");
        int best = task.target_offset;
        for (int c = task.target_offset + 1; c < task.target_offset + task.target_count; ++c)
            if (logits.at(0, std::size_t(c)) > logits.at(0, std::size_t(best))) best = c;
        out.push_back(best);
        return out;
    }
    out.reserve(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        out.push_back(int(best));
    }
    return out;
}

double evaluate(const ModelConfig& cfg, const ParameterStore& theta_eff, const TaskSpec& task,
                const Dataset& dataset) {
    if (dataset.empty()) throw ConfigError("evaluate: empty dataset for task " + task.id);
    if (task.kind == TaskKind::Classification) {
        std::size_t correct = 0;
        for (const auto& ex : dataset) {
            Graph g;
            auto logits = model_forward(g, cfg, task, ex.frames, theta_eff);
            if (predict(g.value(logits), task)[0] == ex.targets[0]) ++correct;
        }
        return double(correct) / double(dataset.size());
    }
    std::vector<std::vector<int>> refs, hyps;
    refs.reserve(dataset.size());
    hyps.reserve(dataset.size());
    for (const auto& ex : dataset) {
        Graph g;
        auto logits = model_forward(g, cfg, task, ex.frames, theta_eff);
        refs.push_back(ex.targets);
        hyps.push_back(predict(g.value(logits), task));
    }
    return token_error_rate(refs, hyps);
}

double scalar_score(double metric, TaskKind kind) {
    if (kind == TaskKind::Classification) return metric;
    return 1.0 - std::min(metric, 1.0);
}

}  // namespace forge
