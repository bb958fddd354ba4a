#include "forge/experiment.hpp"

namespace forge {

MaskSet replicate_agnostic(const PruningMask& m, const TaskRegistry& reg) {
    MaskSet out;
    for (const auto& t : reg.tasks) {
        PruningMask copy = m;
        copy.set_owner(t.id);
        out.masks.push_back(std::move(copy));
    }
    return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::string& experiment_id) {
    ExperimentOutcome out;
    out.registry = build_registry(cfg.registry);
    out.data = materialize_datasets(out.registry);
    out.model = cfg.model(out.registry);

    out.dense = train_dense(out.model, out.registry, out.data, cfg.run);

    ParameterStore theta = out.dense.theta;
    out.task_masks = identify_masks(theta, out.model, out.registry, out.data, cfg.run).masks;
    out.agnostic_mask = identify_masks_task_agnostic(theta, out.model, out.registry, out.data, cfg.run).masks;

    out.multi = update_parameters(out.dense.theta, out.task_masks, out.model, out.registry, out.data, cfg.run);
    out.single = single_task_update(out.dense.theta, out.task_masks, out.model, out.registry, out.data, cfg.run);
    const MaskSet agnostic_per_task = replicate_agnostic(out.agnostic_mask.masks.front(), out.registry);
    out.agnostic = update_parameters(out.dense.theta, agnostic_per_task, out.model, out.registry, out.data, cfg.run);

    const double sparsity = expected_sparsity(cfg.run.p, cfg.run.q);

    ReportRow dense_row{experiment_id, "dense", 0.0, 100.0, 100.0,
                        evaluate_all(out.model, out.dense.theta, out.registry, out.data, nullptr)};
    out.rows.push_back(dense_row);

    ReportRow multi_row;
    multi_row.experiment_id = experiment_id;
    multi_row.variant = "multi-task";
    multi_row.sparsity = sparsity;
    multi_row.param_one = param_percent_one(out.multi.theta, out.task_masks.masks.front());
    multi_row.param_all = param_percent(out.multi.theta, out.task_masks, ParamPercentMode::AllMultiTask);
    multi_row.scores = evaluate_all(out.model, out.multi.theta, out.registry, out.data, &out.task_masks);
    out.rows.push_back(multi_row);

    ReportRow single_row;
    single_row.experiment_id = experiment_id;
    single_row.variant = "single-task";
    single_row.sparsity = sparsity;
    single_row.param_one = multi_row.param_one;
    single_row.param_all = param_percent(out.dense.theta, out.task_masks, ParamPercentMode::AllSingleTask);
    for (std::size_t t = 0; t < out.registry.tasks.size(); ++t)
        single_row.scores.push_back(evaluate(out.model,
                                             apply_mask(out.single.thetas[t], out.task_masks.masks[t]),
                                             out.registry.tasks[t], out.data[t].eval));
    out.rows.push_back(single_row);

    ReportRow agn_row;
    agn_row.experiment_id = experiment_id;
    agn_row.variant = "task-agnostic";
    agn_row.sparsity = sparsity;
    agn_row.param_one = param_percent_one(out.agnostic.theta, out.agnostic_mask.masks.front());
    agn_row.param_all = agn_row.param_one;
    agn_row.scores = evaluate_all(out.model, out.agnostic.theta, out.registry, out.data, &out.agnostic_mask);
    out.rows.push_back(agn_row);

    return out;
}

}  // namespace forge
