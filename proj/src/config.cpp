#include "forge/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "forge/errors.hpp"

namespace forge {

ModelConfig ExperimentConfig::model(const TaskRegistry& reg) const {
    ModelConfig m;
    m.input_dim = registry.input_dim;
    m.hidden_dim = hidden_dim;
    m.num_trunk_layers = num_trunk_layers;
    m.vocab_size = reg.vocab_size;
    m.task_embedding_dim = task_embedding_dim;
    m.max_seq_len = max_seq_len;
    m.num_tasks = int(reg.tasks.size());
    m.seed = run.seed;
    m.validate();
    return m;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Parser {
    ExperimentConfig& cfg;

    bool set(const std::string& key, const std::string& value) {
        auto as_int = [&] {
            try {
                std::size_t pos = 0;
                int v = std::stoi(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("bad integer for " + key + ": " + value);
            }
        };
        auto as_u64 = [&] {
            try {
                std::size_t pos = 0;
                uint64_t v = std::stoull(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("bad integer for " + key + ": " + value);
            }
        };
        auto as_double = [&] {
            try {
                std::size_t pos = 0;
                double v = std::stod(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("bad number for " + key + ": " + value);
            }
        };

        RunConfig& r = cfg.run;
        RegistryConfig& g = cfg.registry;
        if (key == "p") r.p = as_double();
        else if (key == "q") r.q = as_int();
        else if (key == "n1") r.n1 = as_int();
        else if (key == "n2") r.n2 = as_int();
        else if (key == "r") r.r = as_int();
        else if (key == "base_lr_dense") r.base_lr_dense = as_double();
        else if (key == "warmup_dense") r.warmup_dense = as_int();
        else if (key == "base_lr_identify") r.base_lr_identify = as_double();
        else if (key == "warmup_identify") r.warmup_identify = as_int();
        else if (key == "base_lr_update") r.base_lr_update = as_double();
        else if (key == "warmup_update") r.warmup_update = as_int();
        else if (key == "base_lr_continual") r.base_lr_continual = as_double();
        else if (key == "warmup_continual") r.warmup_continual = as_int();
        else if (key == "batch_size") r.batch_size = as_int();
        else if (key == "seed") { r.seed = as_u64(); g.seed = r.seed; }
        else if (key == "dense_steps") r.dense_steps = as_int();
        else if (key == "eval_interval") r.eval_interval = as_int();
        else if (key == "eval_every_repeats") r.eval_every_repeats = as_int();
        else if (key == "continual_steps") r.continual_steps = as_int();
        else if (key == "continual_eval_interval") r.continual_eval_interval = as_int();
        else if (key == "continual_data") {
            if (value == "augment") r.continual_replace = false;
            else if (value == "replace") r.continual_replace = true;
            else throw ConfigError("continual_data must be augment or replace, got " + value);
        }
        else if (key == "precision") {
            if (value == "f64") r.f32 = false;
            else if (value == "f32") r.f32 = true;
            else throw ConfigError("precision must be f32 or f64, got " + value);
        }
        else if (key == "num_tasks") g.num_tasks = as_int();
        else if (key == "input_dim") g.input_dim = as_int();
        else if (key == "noise_cls") g.noise_cls = as_double();
        else if (key == "noise_seq") g.noise_seq = as_double();
        else if (key == "train_size") g.train_size = as_int();
        else if (key == "cls_a_train_size") g.cls_a_train_size = as_int();
        else if (key == "eval_size") g.eval_size = as_int();
        else if (key == "continual_size") g.continual_size = as_int();
        else if (key == "seq_len_min") g.len_min = as_int();
        else if (key == "seq_len_max") g.len_max = as_int();
        else if (key == "upsample_cls_a") g.upsample_cls_a = as_int();
        else if (key == "continual_shift") g.continual_shift = as_double();
        else if (key == "hidden_dim") cfg.hidden_dim = as_int();
        else if (key == "num_trunk_layers") cfg.num_trunk_layers = as_int();
        else if (key == "task_embedding_dim") cfg.task_embedding_dim = as_int();
        else if (key == "max_seq_len") cfg.max_seq_len = as_int();
        else return false;
        return true;
    }
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    Parser parser{cfg};
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (!parser.set(key, value))
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.run.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os.precision(17);
    os << "p = " << run.p << "\n"
       << "q = " << run.q << "\n"
       << "n1 = " << run.n1 << "\n"
       << "n2 = " << run.n2 << "\n"
       << "r = " << run.r << "\n"
       << "base_lr_dense = " << run.base_lr_dense << "\n"
       << "warmup_dense = " << run.warmup_dense << "\n"
       << "base_lr_identify = " << run.base_lr_identify << "\n"
       << "warmup_identify = " << run.warmup_identify << "\n"
       << "base_lr_update = " << run.base_lr_update << "\n"
       << "warmup_update = " << run.warmup_update << "\n"
       << "base_lr_continual = " << run.base_lr_continual << "\n"
       << "warmup_continual = " << run.warmup_continual << "\n"
       << "batch_size = " << run.batch_size << "\n"
       << "seed = " << run.seed << "\n"
       << "dense_steps = " << run.dense_steps << "\n"
       << "eval_interval = " << run.eval_interval << "\n"
       << "eval_every_repeats = " << run.eval_every_repeats << "\n"
       << "continual_steps = " << run.continual_steps << "\n"
       << "continual_eval_interval = " << run.continual_eval_interval << "\n"
       << "continual_data = " << (run.continual_replace ? "replace" : "augment") << "\n"
       << "precision = " << (run.f32 ? "f32" : "f64") << "\n"
       << "num_tasks = " << registry.num_tasks << "\n"
       << "input_dim = " << registry.input_dim << "\n"
       << "noise_cls = " << registry.noise_cls << "\n"
       << "noise_seq = " << registry.noise_seq << "\n"
       << "train_size = " << registry.train_size << "\n"
       << "cls_a_train_size = " << registry.cls_a_train_size << "\n"
       << "eval_size = " << registry.eval_size << "\n"
       << "continual_size = " << registry.continual_size << "\n"
       << "seq_len_min = " << registry.len_min << "\n"
       << "seq_len_max = " << registry.len_max << "\n"
       << "upsample_cls_a = " << registry.upsample_cls_a << "\n"
       << "continual_shift = " << registry.continual_shift << "\n"
       << "hidden_dim = " << hidden_dim << "\n"
       << "num_trunk_layers = " << num_trunk_layers << "\n"
       << "task_embedding_dim = " << task_embedding_dim << "\n"
       << "max_seq_len = " << max_seq_len << "\n";
    return os.str();
}

uint64_t fnv1a_hash(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace forge
