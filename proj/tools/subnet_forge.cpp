#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/checkpoint.hpp"
#include "forge/config.hpp"
#include "forge/errors.hpp"
#include "forge/experiment.hpp"
#include "forge/fd_check.hpp"
#include "forge/report.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::string outdir;
    std::string init;
    std::string masks;
    std::string mode;
    std::string task;
    std::string precision;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_config = true) {
    if (with_config) cmd->add_option("--config", o.config_path, "config file (key = value lines)");
    cmd->add_option("--seed", o.seed, "override the config seed")->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--out", o.out, "output file");
    cmd->add_option("--outdir", o.outdir, "directory for CSV/SVG reports");
    cmd->add_option("--init", o.init, "initialization checkpoint");
    cmd->add_option("--masks", o.masks, "mask checkpoint");
    cmd->add_option("--mode", o.mode, "variant selector");
    cmd->add_option("--task", o.task, "target task id");
    cmd->add_option("--precision", o.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
}

ExperimentConfig load_config(const CommonOpts& o) {
    if (o.config_path.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = parse_config_file(o.config_path);
    if (o.seed_set) {
        cfg.run.seed = o.seed;
        cfg.registry.seed = o.seed;
    }
    if (o.precision == "f32") cfg.run.f32 = true;
    if (o.precision == "f64") cfg.run.f32 = false;
    return cfg;
}

void manifest(const std::vector<std::string>& argv, const ExperimentConfig* cfg,
              const std::vector<std::string>& outputs) {
    append_run_manifest("runs.log", argv, cfg ? fnv1a_hash(cfg->echo()) : 0,
                        cfg ? cfg->run.seed : 0, outputs);
}

ParameterStore load_store_from(const Checkpoint& ckpt, const std::string& prefix, const ModelConfig& model) {
    return ckpt.take_store(prefix, init_model_params(model));
}

void save_model_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                           const ParameterStore& theta, const ParameterStore* theta0,
                           const MaskSet* masks) {
    Checkpoint ckpt;
    ckpt.f32 = cfg.run.f32;
    ckpt.put_store("theta", theta);
    if (theta0) ckpt.put_store("theta0", *theta0);
    if (masks) ckpt.masks = masks->masks;
    ckpt.config_text = cfg.echo();
    ckpt.has_rng = true;
    ckpt.rng_key = cfg.run.seed;
    ckpt.rng_counter = 0;
    save_checkpoint(path, ckpt);
}

void print_scores(const TaskRegistry& reg, const std::vector<double>& scores) {
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        const char* metric = reg.tasks[t].kind == TaskKind::Classification ? "acc" : "ter";
        std::cout << "  " << reg.tasks[t].id << " " << metric << " = " << format_csv_value(scores[t]) << "\n";
    }
}

int cmd_gen_data(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.out.empty()) throw ConfigError("gen-data: --out directory is required");
    fs::create_directories(o.out);
    const auto reg = build_registry(cfg.registry);
    std::vector<std::string> written;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        for (auto [split, name] : {std::pair{Split::Train, "train"}, {Split::Eval, "eval"},
                                   {Split::Continual, "continual"}}) {
            const auto path = (fs::path(o.out) / (reg.tasks[t].id + "_" + name + ".tsv")).string();
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            if (!os) throw IoError("cannot write " + path);
            export_dataset(generate(reg.data_specs[t], reg.tasks[t].id, split), os);
            written.push_back(path);
        }
    }
    std::cout << "wrote " << written.size() << " dataset files to " << o.out << "\n";
    manifest(argv, &cfg, written);
    return 0;
}

int cmd_train_dense(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.out.empty()) throw ConfigError("train-dense: --out checkpoint path is required");
    const auto reg = build_registry(cfg.registry);
    const auto data = materialize_datasets(reg);
    const auto model = cfg.model(reg);
    const auto init = init_model_params(model);
    auto res = train_dense(model, reg, data, cfg.run);
    save_model_checkpoint(o.out, cfg, res.theta, &init, nullptr);
    std::cout << "dense model trained for " << res.optimizer_steps << " steps\n";
    print_scores(reg, res.history.records.back().metrics);
    std::vector<std::string> outputs{o.out};
    if (!o.outdir.empty()) {
        fs::create_directories(o.outdir);
        const auto curves = (fs::path(o.outdir) / "curves_dense.csv").string();
        write_curves_csv(curves, res.history);
        outputs.push_back(curves);
    }
    manifest(argv, &cfg, outputs);
    return 0;
}

int cmd_find_masks(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.init.empty() || o.out.empty()) throw ConfigError("find-masks: --init and --out are required");
    const auto reg = build_registry(cfg.registry);
    const auto data = materialize_datasets(reg);
    const auto model = cfg.model(reg);
    ParameterStore theta = load_store_from(load_checkpoint(o.init), "theta", model);

    const std::string mode = o.mode.empty() ? "task-specific" : o.mode;
    IdentifyResult res;
    if (mode == "task-specific")
        res = identify_masks(theta, model, reg, data, cfg.run);
    else if (mode == "task-agnostic")
        res = identify_masks_task_agnostic(theta, model, reg, data, cfg.run);
    else
        throw ConfigError("find-masks: --mode must be task-specific or task-agnostic");

    Checkpoint ckpt;
    ckpt.f32 = cfg.run.f32;
    ckpt.masks = res.masks.masks;
    ckpt.config_text = cfg.echo();
    save_checkpoint(o.out, ckpt);
    for (const auto& m : res.masks.masks)
        std::cout << "  " << m.owner() << " sparsity = " << format_csv_value(m.sparsity())
                  << " (surviving " << m.surviving() << "/" << m.total_bits() << ")\n";
    manifest(argv, &cfg, {o.out});
    return 0;
}

int cmd_train_subnets(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.init.empty() || o.masks.empty() || o.out.empty())
        throw ConfigError("train-subnets: --init, --masks and --out are required");
    const auto reg = build_registry(cfg.registry);
    const auto data = materialize_datasets(reg);
    const auto model = cfg.model(reg);
    const ParameterStore theta0 = load_store_from(load_checkpoint(o.init), "theta", model);
    Checkpoint mask_ckpt = load_checkpoint(o.masks);
    MaskSet masks;
    masks.masks = mask_ckpt.masks;
    if (masks.masks.size() == 1 && masks.masks.front().owner() == "agnostic")
        masks = replicate_agnostic(masks.masks.front(), reg);

    const std::string mode = o.mode.empty() ? "multi-task" : o.mode;
    std::vector<std::string> outputs{o.out};
    if (mode == "multi-task") {
        auto res = update_parameters(theta0, masks, model, reg, data, cfg.run);
        save_model_checkpoint(o.out, cfg, res.theta, &theta0, &masks);
        std::cout << "updated shared parameters for " << res.optimizer_steps << " steps\n";
        print_scores(reg, res.history.records.back().metrics);
        if (!o.outdir.empty()) {
            fs::create_directories(o.outdir);
            const auto curves = (fs::path(o.outdir) / "curves_multi-task.csv").string();
            write_curves_csv(curves, res.history);
            outputs.push_back(curves);
        }
    } else if (mode == "single-task") {
        auto res = single_task_update(theta0, masks, model, reg, data, cfg.run);
        Checkpoint ckpt;
        ckpt.f32 = cfg.run.f32;
        for (std::size_t t = 0; t < reg.tasks.size(); ++t)
            ckpt.put_store("theta@" + reg.tasks[t].id, res.thetas[t]);
        ckpt.put_store("theta0", theta0);
        ckpt.masks = masks.masks;
        ckpt.config_text = cfg.echo();
        save_checkpoint(o.out, ckpt);
        for (std::size_t t = 0; t < reg.tasks.size(); ++t)
            std::cout << "  " << reg.tasks[t].id << " score = "
                      << format_csv_value(res.histories[t].records.back().metrics[0]) << "\n";
    } else {
        throw ConfigError("train-subnets: --mode must be multi-task or single-task");
    }
    manifest(argv, &cfg, outputs);
    return 0;
}

int cmd_continual(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.init.empty() || o.task.empty() || o.mode.empty())
        throw ConfigError("continual: --init, --task and --mode are required");
    const auto reg = build_registry(cfg.registry);
    const auto data = materialize_datasets(reg);
    const auto model = cfg.model(reg);
    const Checkpoint init_ckpt = load_checkpoint(o.init);
    const ParameterStore theta = load_store_from(init_ckpt, "theta", model);

    MaskSet masks;
    if (!o.masks.empty())
        masks.masks = load_checkpoint(o.masks).masks;
    else
        masks.masks = init_ckpt.masks;
    const ContinualMode mode = continual_mode_from_string(o.mode);
    const MaskSet* mask_ptr = masks.masks.empty() ? nullptr : &masks;

    auto res = continual_learn(theta, mask_ptr, o.task, mode, model, reg, data, cfg.run);
    std::cout << "continual training (" << o.mode << ") on " << o.task << " for "
              << res.optimizer_steps << " steps\n";
    print_scores(reg, res.history.records.back().metrics);

    std::vector<std::string> outputs;
    if (!o.out.empty()) {
        save_model_checkpoint(o.out, cfg, res.theta, nullptr, mask_ptr);
        outputs.push_back(o.out);
    }
    if (!o.outdir.empty()) {
        fs::create_directories(o.outdir);
        const auto curves = (fs::path(o.outdir) / ("curves_" + o.task + ".csv")).string();
        write_curves_csv(curves, res.history);
        const auto svg = (fs::path(o.outdir) / ("curves_" + o.task + ".svg")).string();
        write_curves_svg(svg, res.history);
        outputs.push_back(curves);
        outputs.push_back(svg);
    }
    manifest(argv, &cfg, outputs);
    return 0;
}

int cmd_analyze(const CommonOpts& o, const std::vector<std::string>& argv) {
    if (o.masks.empty() || o.out.empty()) throw ConfigError("analyze: --masks and --out are required");
    MaskSet masks;
    masks.masks = load_checkpoint(o.masks).masks;
    if (masks.masks.empty()) throw ConfigError("analyze: checkpoint contains no masks");
    std::vector<std::string> names;
    for (const auto& m : masks.masks) names.push_back(m.owner());
    const auto mat = overlap_matrix(masks);
    write_overlap_csv(o.out, names, mat);
    std::vector<std::string> outputs{o.out};
    if (!o.outdir.empty()) {
        fs::create_directories(o.outdir);
        const auto svg = (fs::path(o.outdir) / "overlap.svg").string();
        write_heatmap_svg(svg, names, mat);
        outputs.push_back(svg);
    }
    std::cout << "overlap matrix written for " << names.size() << " masks\n";
    append_run_manifest("runs.log", argv, 0, 0, outputs);
    return 0;
}

int cmd_gradcheck(const CommonOpts& o, const std::vector<std::string>& argv) {
    RegistryConfig rc;
    rc.seed = o.seed;
    rc.train_size = 4;
    rc.cls_a_train_size = 4;
    rc.eval_size = 4;
    rc.continual_size = 4;
    const auto reg = build_registry(rc);
    ModelConfig model;
    model.input_dim = rc.input_dim;
    model.hidden_dim = 10;
    model.num_trunk_layers = 2;
    model.vocab_size = reg.vocab_size;
    model.task_embedding_dim = 4;
    model.num_tasks = int(reg.tasks.size());
    model.seed = o.seed;
    const auto theta = init_model_params(model);

    double worst = 0.0;
    for (std::size_t t = 0; t < reg.tasks.size(); ++t) {
        const Example ex = generate(reg.data_specs[t], reg.tasks[t].id, Split::Train)[0];
        Graph g;
        auto loss = model_loss(g, model, reg.tasks[t], ex, theta);
        g.backward(loss);
        Gradients analytic = Gradients::zeros_like(theta);
        g.accumulate_param_grads(theta, analytic, 1.0);
        auto estimate = fd_gradient(
            [&](const ParameterStore& th) {
                Graph gg;
                return gg.value(model_loss(gg, model, reg.tasks[t], ex, th)).values[0];
            },
            theta, 1e-5);
        worst = std::max(worst, max_relative_error(analytic, estimate));
    }
    std::cout << "max relative error = " << worst << "\n";
    append_run_manifest("runs.log", argv, 0, o.seed, {});
    if (worst >= 1e-4) {
        std::cerr << "gradcheck failed: " << worst << " >= 1e-4\n";
        return 2;
    }
    return 0;
}

int cmd_report(const CommonOpts& o, const std::vector<std::string>& argv) {
    auto cfg = load_config(o);
    if (o.outdir.empty()) throw ConfigError("report: --outdir is required");
    fs::create_directories(o.outdir);
    auto outcome = run_experiment(cfg, "sparsity_" + format_csv_value(expected_sparsity(cfg.run.p, cfg.run.q)));

    std::vector<std::string> task_ids;
    for (const auto& t : outcome.registry.tasks) task_ids.push_back(t.id);
    const auto summary = (fs::path(o.outdir) / "summary.csv").string();
    write_summary_csv(summary, task_ids, outcome.rows);
    const auto overlap_path = (fs::path(o.outdir) / "overlap.csv").string();
    write_overlap_csv(overlap_path, task_ids, overlap_matrix(outcome.task_masks));
    write_heatmap_svg((fs::path(o.outdir) / "overlap.svg").string(), task_ids,
                      overlap_matrix(outcome.task_masks));
    const auto curves = (fs::path(o.outdir) / "curves_multi-task.csv").string();
    write_curves_csv(curves, outcome.multi.history);
    write_curves_svg((fs::path(o.outdir) / "curves_multi-task.svg").string(), outcome.multi.history);

    for (const auto& row : outcome.rows) {
        std::cout << row.variant << ": param One/All = " << format_csv_value(row.param_one) << "/"
                  << format_csv_value(row.param_all) << "\n";
        print_scores(outcome.registry, row.scores);
    }
    manifest(argv, &cfg, {summary, overlap_path, curves});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"task-specific subnetwork discovery and continual learning on a multi-task model"};
    app.require_subcommand(1);

    const char* threads_env = std::getenv("SUBNET_FORGE_THREADS");
    if (threads_env) {
        char* end = nullptr;
        const long v = std::strtol(threads_env, &end, 10);
        if (!end || *end != '\0' || v < 1) {
            std::cerr << "SUBNET_FORGE_THREADS must be a positive integer\n";
            return 1;
        }
        // all pipelines are single-threaded; the cap is accepted for compatibility
    }

    CommonOpts opts;
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic datasets as TSV files");
    auto* dense = app.add_subcommand("train-dense", "train the dense multi-task model");
    auto* find = app.add_subcommand("find-masks", "identify pruning masks by iterative magnitude pruning");
    auto* subnets = app.add_subcommand("train-subnets", "update parameters under the identified masks");
    auto* continual = app.add_subcommand("continual", "continual learning on one task's new data");
    auto* analyze = app.add_subcommand("analyze", "mask overlap analysis");
    auto* gradcheck = app.add_subcommand("gradcheck", "gradient check against finite differences");
    auto* report = app.add_subcommand("report", "run the full pruning comparison and emit reports");
    for (auto* cmd : {gen, dense, find, subnets, continual, analyze, report}) add_common(cmd, opts);
    add_common(gradcheck, opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    std::vector<std::string> argv_vec(argv, argv + argc);
    try {
        if (gen->parsed()) return cmd_gen_data(opts, argv_vec);
        if (dense->parsed()) return cmd_train_dense(opts, argv_vec);
        if (find->parsed()) return cmd_find_masks(opts, argv_vec);
        if (subnets->parsed()) return cmd_train_subnets(opts, argv_vec);
        if (continual->parsed()) return cmd_continual(opts, argv_vec);
        if (analyze->parsed()) return cmd_analyze(opts, argv_vec);
        if (gradcheck->parsed()) return cmd_gradcheck(opts, argv_vec);
        if (report->parsed()) return cmd_report(opts, argv_vec);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
