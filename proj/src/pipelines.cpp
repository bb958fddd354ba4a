#include "forge/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/errors.hpp"
#include "forge/optimizer.hpp"
#include "forge/rng.hpp"

namespace forge {

namespace {

constexpr uint64_t kDenseStream = 0xa1c0de01;
constexpr uint64_t kAlg1Order = 0xa1c0de02;
constexpr uint64_t kAlg1Data = 0xa1c0de03;
constexpr uint64_t kAlg2Order = 0xa1c0de04;
constexpr uint64_t kAlg2Data = 0xa1c0de05;
constexpr uint64_t kAgnosticData = 0xa1c0de06;
constexpr uint64_t kContinualData = 0xa1c0de07;

struct PoolItem {
    int task_index;
    const Example* example;
};

// Epoch-shuffled sampler over a fixed pool.
class BatchStream {
public:
    BatchStream(std::vector<PoolItem> pool, Rng rng) : pool_(std::move(pool)), rng_(rng) {
        if (pool_.empty()) throw ConfigError("batch stream: empty pool");
    }

    void next(std::vector<PoolItem>& out, int n) {
        out.clear();
        for (int i = 0; i < n; ++i) {
            if (pos_ == 0) rng_.shuffle(pool_);
            out.push_back(pool_[pos_]);
            pos_ = (pos_ + 1) % pool_.size();
        }
    }

    std::size_t pool_size() const { return pool_.size(); }

private:
    std::vector<PoolItem> pool_;
    Rng rng_;
    std::size_t pos_ = 0;
};

std::vector<PoolItem> task_pool(const std::vector<TaskData>& data, int task_index) {
    std::vector<PoolItem> pool;
    for (const auto& ex : data[size_t(task_index)].train) pool.push_back({task_index, &ex});
    return pool;
}

std::vector<PoolItem> mixture_pool(const TaskRegistry& reg, const std::vector<TaskData>& data) {
    std::vector<PoolItem> pool;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        if (data[t].train.empty()) throw ConfigError("no training data for task " + reg.tasks[t].id);
        for (int k = 0; k < reg.tasks[t].upsample; ++k)
            for (const auto& ex : data[t].train) pool.push_back({int(t), &ex});
    }
    return pool;
}

// One optimizer step on a batch. Gradients are averaged over the batch,
// masked when a mask is given, and the forward pass always consumes the
// masked effective parameters.
double train_step(ParameterStore& theta, const PruningMask* mask, const ModelConfig& model,
                  const TaskRegistry& reg, const std::vector<PoolItem>& batch, Adam& opt,
                  const WarmupSchedule& schedule) {
    const ParameterStore theta_eff = mask ? apply_mask(theta, *mask) : theta;
    Gradients grads = Gradients::zeros_like(theta);
    const double scale = 1.0 / double(batch.size());
    double loss = 0.0;
    for (const auto& item : batch) {
        Graph g;
        auto l = model_loss(g, model, reg.tasks[size_t(item.task_index)], *item.example, theta_eff);
        loss += scale * g.value(l).values[0];
        g.backward(l);
        g.accumulate_param_grads(theta, grads, scale);
    }
    if (mask) mask_gradients(grads, theta, *mask);
    opt.step(theta, grads, schedule);
    return loss;
}

void record_eval(TrainingHistory& hist, long step, const std::string& trained, double loss,
                 const ModelConfig& model, const ParameterStore& theta, const TaskRegistry& reg,
                 const std::vector<TaskData>& data, const MaskSet* masks) {
    TrainingHistory::Record rec;
    rec.step = step;
    rec.trained_task = trained;
    rec.loss = loss;
    rec.metrics = evaluate_all(model, theta, reg, data, masks);
    hist.records.push_back(std::move(rec));
}

std::vector<int> shuffled_task_order(std::size_t n, Rng rng) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    return order;
}

}  // namespace

void RunConfig::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("run config: p must lie in (0,1)");
    if (q < 0) throw ConfigError("run config: q must be >= 0");
    if (n1 <= 0 || n2 <= 0 || r <= 0 || batch_size <= 0 || dense_steps <= 0 || continual_steps <= 0)
        throw ConfigError("run config: all counts must be positive");
    if (n1 < 10 * n2)
        throw ConfigError("run config: n1 must be at least 10x n2 (got n1=" + std::to_string(n1) +
                          ", n2=" + std::to_string(n2) + ")");
    if (base_lr_dense <= 0 || base_lr_identify <= 0 || base_lr_update <= 0 || base_lr_continual <= 0)
        throw ConfigError("run config: learning rates must be positive");
    if (eval_interval <= 0 || eval_every_repeats <= 0)
        throw ConfigError("run config: eval intervals must be positive");
}

std::vector<TaskData> materialize_datasets(const TaskRegistry& reg) {
    std::vector<TaskData> out;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        TaskData d;
        d.train = generate(reg.data_specs[t], reg.tasks[t].id, Split::Train);
        d.eval = generate(reg.data_specs[t], reg.tasks[t].id, Split::Eval);
        d.continual_shard = generate(reg.data_specs[t], reg.tasks[t].id, Split::Continual);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<double> evaluate_all(const ModelConfig& model, const ParameterStore& theta,
                                 const TaskRegistry& reg, const std::vector<TaskData>& data,
                                 const MaskSet* masks) {
    std::vector<double> metrics;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        const TaskSpec& task = reg.tasks[t];
        if (masks && masks->has_task(task.id)) {
            metrics.push_back(evaluate(model, apply_mask(theta, masks->by_task(task.id)), task, data[t].eval));
        } else if (masks && masks->masks.size() == 1 && masks->masks.front().owner() == "agnostic") {
            metrics.push_back(evaluate(model, apply_mask(theta, masks->masks.front()), task, data[t].eval));
        } else {
            metrics.push_back(evaluate(model, theta, task, data[t].eval));
        }
    }
    return metrics;
}

DenseResult train_dense(const ModelConfig& model, const TaskRegistry& reg,
                        const std::vector<TaskData>& data, const RunConfig& run) {
    run.validate();
    DenseResult res;
    res.theta = init_model_params(model);
    res.history.task_ids.clear();
    for (const auto& t : reg.tasks) res.history.task_ids.push_back(t.id);

    BatchStream stream(mixture_pool(reg, data), Rng::derive(run.seed, kDenseStream));
    Adam opt(res.theta);
    const WarmupSchedule sched{run.base_lr_dense, run.warmup_dense};
    std::vector<PoolItem> batch;
    double window_loss = 0.0;
    int window = 0;
    for (int step = 1; step <= run.dense_steps; ++step) {
        stream.next(batch, run.batch_size);
        window_loss += train_step(res.theta, nullptr, model, reg, batch, opt, sched);
        ++window;
        if (step % run.eval_interval == 0 || step == run.dense_steps) {
            record_eval(res.history, step, "mixture", window_loss / window, model, res.theta, reg, data, nullptr);
            window_loss = 0.0;
            window = 0;
        }
    }
    res.optimizer_steps = opt.step_count();
    return res;
}

IdentifyResult identify_masks(ParameterStore& theta, const ModelConfig& model, const TaskRegistry& reg,
                              const std::vector<TaskData>& data, const RunConfig& run) {
    run.validate();
    const ParameterStore theta0 = theta;
    IdentifyResult res;
    for (const auto& t : reg.tasks) res.masks.masks.push_back(PruningMask::all_ones(theta0, t.id));

    const WarmupSchedule sched{run.base_lr_identify, run.warmup_identify};
    std::vector<PoolItem> batch;
    for (int round = 0; round < run.q; ++round) {
        const auto order = shuffled_task_order(reg.tasks.size(), Rng::derive(run.seed, kAlg1Order, uint64_t(round)));
        for (int t : order) {
            if (data[size_t(t)].train.empty()) throw ConfigError("no training data for task " + reg.tasks[size_t(t)].id);
            PruningMask& m = res.masks.masks[size_t(t)];
            BatchStream stream(task_pool(data, t),
                               Rng::derive(run.seed, kAlg1Data, uint64_t(round) * reg.tasks.size() + uint64_t(t)));
            Adam opt(theta);  // fresh optimizer per segment
            for (int i = 0; i < run.n1; ++i) {
                stream.next(batch, run.batch_size);
                train_step(theta, &m, model, reg, batch, opt, sched);
            }
            res.optimizer_steps += opt.step_count();
            m = global_magnitude_prune(theta, m, run.p);
            theta = theta0;  // rewind
        }
    }
    return res;
}

IdentifyResult identify_masks_task_agnostic(ParameterStore& theta, const ModelConfig& model,
                                            const TaskRegistry& reg, const std::vector<TaskData>& data,
                                            const RunConfig& run) {
    run.validate();
    const ParameterStore theta0 = theta;
    IdentifyResult res;
    res.masks.masks.push_back(PruningMask::all_ones(theta0, "agnostic"));
    PruningMask& m = res.masks.masks.front();

    const WarmupSchedule sched{run.base_lr_identify, run.warmup_identify};
    std::vector<PoolItem> batch;
    for (int round = 0; round < run.q; ++round) {
        BatchStream stream(mixture_pool(reg, data), Rng::derive(run.seed, kAgnosticData, uint64_t(round)));
        Adam opt(theta);
        for (int i = 0; i < run.n1; ++i) {
            stream.next(batch, run.batch_size);
            train_step(theta, &m, model, reg, batch, opt, sched);
        }
        res.optimizer_steps += opt.step_count();
        m = global_magnitude_prune(theta, m, run.p);
        theta = theta0;
    }
    return res;
}

UpdateResult update_parameters(const ParameterStore& theta0, const MaskSet& masks, const ModelConfig& model,
                               const TaskRegistry& reg, const std::vector<TaskData>& data,
                               const RunConfig& run) {
    run.validate();
    if (masks.masks.size() != reg.tasks.size()) throw ShapeError("update_parameters: one mask per task required");
    for (const auto& t : reg.tasks)
        if (!masks.has_task(t.id)) throw ConfigError("update_parameters: missing mask for task " + t.id);

    UpdateResult res;
    res.theta = theta0;
    for (const auto& t : reg.tasks) res.history.task_ids.push_back(t.id);

    Adam opt(res.theta);  // shared across task visits
    const WarmupSchedule sched{run.base_lr_update, run.warmup_update};
    std::vector<BatchStream> streams;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        if (data[t].train.empty()) throw ConfigError("no training data for task " + reg.tasks[t].id);
        streams.emplace_back(task_pool(data, int(t)), Rng::derive(run.seed, kAlg2Data, uint64_t(t)));
    }

    std::vector<PoolItem> batch;
    for (int rep = 1; rep <= run.r; ++rep) {
        const auto order = shuffled_task_order(reg.tasks.size(), Rng::derive(run.seed, kAlg2Order, uint64_t(rep)));
        double loss = 0.0;
        for (int t : order) {
            const PruningMask& m = masks.by_task(reg.tasks[size_t(t)].id);
            for (int i = 0; i < run.n2; ++i) {
                streams[size_t(t)].next(batch, run.batch_size);
                loss = train_step(res.theta, &m, model, reg, batch, opt, sched);
            }
        }
        if (rep % run.eval_every_repeats == 0 || rep == run.r)
            record_eval(res.history, opt.step_count(), reg.tasks[size_t(order.back())].id, loss, model,
                        res.theta, reg, data, &masks);
    }
    res.optimizer_steps = opt.step_count();
    return res;
}

SingleTaskResult single_task_update(const ParameterStore& theta0, const MaskSet& masks,
                                    const ModelConfig& model, const TaskRegistry& reg,
                                    const std::vector<TaskData>& data, const RunConfig& run) {
    SingleTaskResult res;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        TaskRegistry sub;
        sub.tasks = {reg.tasks[t]};
        sub.data_specs = {reg.data_specs[t]};
        sub.vocab_size = reg.vocab_size;
        MaskSet sub_masks;
        sub_masks.masks = {masks.by_task(reg.tasks[t].id)};
        std::vector<TaskData> sub_data = {data[t]};
        auto r = update_parameters(theta0, sub_masks, model, sub, sub_data, run);
        res.thetas.push_back(std::move(r.theta));
        res.histories.push_back(std::move(r.history));
    }
    return res;
}

ContinualMode continual_mode_from_string(const std::string& s) {
    if (s == "pruned-subnetwork") return ContinualMode::PrunedSubnetwork;
    if (s == "dense-full") return ContinualMode::DenseFull;
    if (s == "dense-encoder-only") return ContinualMode::DenseEncoderOnly;
    throw ConfigError("unknown continual mode: " + s);
}

UpdateResult continual_learn(const ParameterStore& theta, const MaskSet* masks, const std::string& target_task,
                             ContinualMode mode, const ModelConfig& model, const TaskRegistry& reg,
                             const std::vector<TaskData>& data, const RunConfig& run) {
    run.validate();
    const int tc = reg.index_of(target_task);
    if (mode == ContinualMode::PrunedSubnetwork && (!masks || !masks->has_task(target_task)))
        throw ConfigError("continual: pruned mode needs a mask for task " + target_task);
    if (data[size_t(tc)].continual_shard.empty())
        throw ConfigError("continual: no continual shard for task " + target_task);

    UpdateResult res;
    res.theta = theta;
    for (const auto& t : reg.tasks) res.history.task_ids.push_back(t.id);

    std::vector<PoolItem> pool;
    if (!run.continual_replace)
        for (const auto& ex : data[size_t(tc)].train) pool.push_back({tc, &ex});
    for (const auto& ex : data[size_t(tc)].continual_shard) pool.push_back({tc, &ex});
    BatchStream stream(std::move(pool), Rng::derive(run.seed, kContinualData));

    const int interval = run.continual_eval_interval > 0
                             ? run.continual_eval_interval
                             : std::max(1, int((stream.pool_size() + size_t(run.batch_size) - 1) / size_t(run.batch_size)));

    const PruningMask* grad_mask = mode == ContinualMode::PrunedSubnetwork ? &masks->by_task(target_task) : nullptr;
    Adam opt(res.theta);
    const WarmupSchedule sched{run.base_lr_continual, run.warmup_continual};
    const MaskSet* eval_masks = mode == ContinualMode::PrunedSubnetwork ? masks : nullptr;

    record_eval(res.history, 0, "", 0.0, model, res.theta, reg, data, eval_masks);

    std::vector<PoolItem> batch;
    for (int step = 1; step <= run.continual_steps; ++step) {
        stream.next(batch, run.batch_size);
        double loss;
        if (mode == ContinualMode::DenseEncoderOnly) {
            // trunk weight matrices only; heads, biases and embeddings frozen
            const ParameterStore& theta_eff = res.theta;
            Gradients grads = Gradients::zeros_like(res.theta);
            const double scale = 1.0 / double(batch.size());
            loss = 0.0;
            for (const auto& item : batch) {
                Graph g;
                auto l = model_loss(g, model, reg.tasks[size_t(item.task_index)], *item.example, theta_eff);
                loss += scale * g.value(l).values[0];
                g.backward(l);
                g.accumulate_param_grads(res.theta, grads, scale);
            }
            for (std::size_t e = 0; e < res.theta.num_entries(); ++e) {
                const std::string& name = res.theta.entry(e).name;
                const bool trunk_weight = name.rfind("trunk", 0) == 0 && name.find("/weight") != std::string::npos;
                if (!trunk_weight) std::fill(grads.by_entry[e].begin(), grads.by_entry[e].end(), 0.0);
            }
            opt.step(res.theta, grads, sched);
        } else {
            loss = train_step(res.theta, grad_mask, model, reg, batch, opt, sched);
        }
        if (step % interval == 0 || step == run.continual_steps)
            record_eval(res.history, step, target_task, loss, model, res.theta, reg, data, eval_masks);
    }
    res.optimizer_steps = opt.step_count();
    return res;
}

}  // namespace forge
