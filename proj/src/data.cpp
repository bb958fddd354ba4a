#include "forge/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {

namespace {

constexpr uint64_t kProtoStream = 0xda7a0001;
constexpr uint64_t kExampleStream = 0xda7a0002;
constexpr uint64_t kShiftStream = 0xda7a0003;

// Domain shift for the continual split: rotate seeded pairs of feature
// dimensions by continual_shift radians. Orthogonal, so signal energy
// is preserved, but it cannot be absorbed by bias terms alone.
void apply_shift(const DatasetSpec& spec, Split split, Dataset& data) {
    if (split != Split::Continual || spec.continual_shift == 0.0) return;
    Rng rng = Rng::derive(spec.seed, kShiftStream);
    std::vector<int> dims(size_t(spec.input_dim));
    for (int d = 0; d < spec.input_dim; ++d) dims[size_t(d)] = d;
    rng.shuffle(dims);
    const double c = std::cos(spec.continual_shift), s = std::sin(spec.continual_shift);
    for (auto& ex : data)
        for (auto& frame : ex.frames)
            for (std::size_t i = 0; i + 1 < dims.size(); i += 2) {
                double& a = frame[size_t(dims[i])];
                double& b = frame[size_t(dims[i + 1])];
                const double na = c * a - s * b, nb = s * a + c * b;
                a = na;
                b = nb;
            }
}

int split_size(const DatasetSpec& spec, Split split) {
    switch (split) {
        case Split::Train: return spec.train_size;
        case Split::Eval: return spec.eval_size;
        case Split::Continual: return spec.continual_size;
    }
    throw ConfigError("unknown split");
}

int draw_length(const DatasetSpec& spec, Rng& rng) {
    return spec.len_min + int(rng.next_below(uint64_t(spec.len_max - spec.len_min + 1)));
}

Rng example_stream(const DatasetSpec& spec, Split split, int idx) {
    return Rng::derive(spec.seed, kExampleStream + uint64_t(split) * 0x100000, uint64_t(idx));
}

}  // namespace

void DatasetSpec::validate() const {
    if (num_targets < 2) throw ConfigError("dataset: need at least 2 classes/tokens");
    if (input_dim <= 0 || train_size <= 0 || eval_size <= 0) throw ConfigError("dataset: sizes must be positive");
    if (len_min <= 0 || len_max < len_min) throw ConfigError("dataset: bad length range");
    if (noise < 0.0) throw ConfigError("dataset: noise must be >= 0");
    if (continual_shift < 0.0) throw ConfigError("dataset: continual_shift must be >= 0");
    if (kind == TaskKind::Sequence && num_targets > input_dim)
        throw ConfigError("dataset: token alphabet exceeds input_dim one-hot capacity");
    if (tag_style && num_tags < 1) throw ConfigError("dataset: tag_style requires num_tags >= 1");
}

std::vector<std::vector<double>> class_prototypes(const DatasetSpec& spec) {
    std::vector<std::vector<double>> protos;
    for (int c = 0; c < spec.num_targets; ++c) {
        Rng rng = Rng::derive(spec.seed, kProtoStream, uint64_t(c));
        std::vector<double> p(size_t(spec.input_dim));
        double norm = 0.0;
        for (double& v : p) {
            v = rng.next_gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : p) v /= norm;
        protos.push_back(std::move(p));
    }
    return protos;
}

Dataset gen_classification(const DatasetSpec& spec, const std::string& task_id, Split split) {
    spec.validate();
    const auto protos = class_prototypes(spec);
    const int n = split_size(spec, split);
    Dataset out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = example_stream(spec, split, i);
        const int label = i % spec.num_targets;  // balanced within +-1
        Example ex;
        ex.task_id = task_id;
        const int len = draw_length(spec, rng);
        ex.frames.resize(size_t(len));
        for (auto& frame : ex.frames) {
            frame.resize(size_t(spec.input_dim));
            for (int d = 0; d < spec.input_dim; ++d)
                frame[size_t(d)] = protos[size_t(label)][size_t(d)] + spec.noise * rng.next_gaussian();
        }
        ex.targets = {spec.target_offset + label};
        out.push_back(std::move(ex));
    }
    apply_shift(spec, split, out);
    return out;
}

Dataset gen_transduction(const DatasetSpec& spec, const std::string& task_id, Split split) {
    spec.validate();
    const int n = split_size(spec, split);
    Dataset out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = example_stream(spec, split, i);
        Example ex;
        ex.task_id = task_id;
        const int len = draw_length(spec, rng);
        ex.frames.resize(size_t(len));
        ex.targets.resize(size_t(len));
        for (int pos = 0; pos < len; ++pos) {
            const int tok = int(rng.next_below(uint64_t(spec.num_targets)));
            auto& frame = ex.frames[size_t(pos)];
            frame.assign(size_t(spec.input_dim), 0.0);
            frame[size_t(tok)] = 1.0;
            for (int d = 0; d < spec.input_dim; ++d) frame[size_t(d)] += spec.noise * rng.next_gaussian();
            if (spec.tag_style && pos % 2 == 0)
                ex.targets[size_t(pos)] = spec.tag_offset + tok % spec.num_tags;
            else
                ex.targets[size_t(pos)] = spec.target_offset + tok;
        }
        out.push_back(std::move(ex));
    }
    apply_shift(spec, split, out);
    return out;
}

Dataset generate(const DatasetSpec& spec, const std::string& task_id, Split split) {
    return spec.kind == TaskKind::Classification ? gen_classification(spec, task_id, split)
                                                 : gen_transduction(spec, task_id, split);
}

std::size_t edit_distance(const std::vector<int>& ref, const std::vector<int>& hyp) {
    const std::size_t n = ref.size(), m = hyp.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double token_error_rate(const std::vector<std::vector<int>>& refs,
                        const std::vector<std::vector<int>>& hyps) {
    if (refs.size() != hyps.size()) throw ShapeError("token_error_rate: refs/hyps count mismatch");
    std::size_t errors = 0, total = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        errors += edit_distance(refs[i], hyps[i]);
        total += refs[i].size();
    }
    if (total == 0) throw NumericError("token_error_rate: zero total reference length");
    return double(errors) / double(total);
}

Dataset upsample(const Dataset& data, int factor) {
    if (factor < 1) throw ConfigError("upsample: factor must be >= 1");
    Dataset out;
    out.reserve(data.size() * size_t(factor));
    for (const auto& ex : data)
        for (int k = 0; k < factor; ++k) out.push_back(ex);
    return out;
}

void export_dataset(const Dataset& data, std::ostream& os) {
    std::ostringstream line;
    line.precision(17);
    for (const auto& ex : data) {
        line.str("");
        line << ex.task_id << '\t';
        for (std::size_t f = 0; f < ex.frames.size(); ++f) {
            if (f) line << '|';
            for (std::size_t d = 0; d < ex.frames[f].size(); ++d) {
                if (d) line << ' ';
                line << ex.frames[f][d];
            }
        }
        line << '\t';
        for (std::size_t t = 0; t < ex.targets.size(); ++t) {
            if (t) line << ' ';
            line << ex.targets[t];
        }
        os << line.str() << '\n';
    }
}

Dataset import_dataset(std::istream& is) {
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw IoError("dataset import: malformed line " + std::to_string(lineno));
        Example ex;
        ex.task_id = line.substr(0, tab1);
        std::istringstream frames_in(line.substr(tab1 + 1, tab2 - tab1 - 1));
        std::string frame_str;
        while (std::getline(frames_in, frame_str, '|')) {
            std::istringstream fs(frame_str);
            std::vector<double> frame;
            double v;
            while (fs >> v) frame.push_back(v);
            ex.frames.push_back(std::move(frame));
        }
        std::istringstream ts(line.substr(tab2 + 1));
        int t;
        while (ts >> t) ex.targets.push_back(t);
        if (ex.frames.empty() || ex.targets.empty())
            throw IoError("dataset import: empty frames or targets at line " + std::to_string(lineno));
        out.push_back(std::move(ex));
    }
    return out;
}

const TaskSpec& TaskRegistry::by_id(const std::string& id) const {
    return tasks[size_t(index_of(id))];
}

int TaskRegistry::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].id == id) return int(i);
    throw ConfigError("unknown task id: " + id);
}

TaskRegistry build_registry(const RegistryConfig& cfg) {
    if (cfg.num_tasks != 3 && cfg.num_tasks != 7)
        throw ConfigError("task registry supports 3 or 7 tasks, got " + std::to_string(cfg.num_tasks));
    TaskRegistry reg;
    int next_vocab = 0;
    int next_specifier = 0;
    uint64_t task_seed = 0;

    auto add_cls = [&](const std::string& id, int classes, int train_size, int ups) {
        TaskSpec t;
        t.id = id;
        t.specifier = next_specifier++;
        t.kind = TaskKind::Classification;
        t.target_offset = next_vocab;
        t.target_count = classes;
        t.upsample = ups;
        next_vocab += classes;
        DatasetSpec d;
        d.kind = TaskKind::Classification;
        d.num_targets = classes;
        d.target_offset = t.target_offset;
        d.input_dim = cfg.input_dim;
        d.train_size = train_size;
        d.eval_size = cfg.eval_size;
        d.continual_size = cfg.continual_size;
        d.len_min = cfg.len_min;
        d.len_max = cfg.len_max;
        d.noise = cfg.noise_cls;
        d.continual_shift = cfg.continual_shift;
        d.seed = Rng::mix(cfg.seed ^ Rng::mix(0xbeef00 + task_seed++));
        reg.tasks.push_back(t);
        reg.data_specs.push_back(d);
    };
    auto add_seq = [&](const std::string& id, int alphabet, bool tag_style, int num_tags) {
        TaskSpec t;
        t.id = id;
        t.specifier = next_specifier++;
        t.kind = TaskKind::Sequence;
        t.target_offset = next_vocab;
        t.target_count = alphabet;
        next_vocab += alphabet;
        DatasetSpec d;
        d.kind = TaskKind::Sequence;
        d.num_targets = alphabet;
        d.target_offset = t.target_offset;
        d.input_dim = cfg.input_dim;
        d.train_size = cfg.train_size;
        d.eval_size = cfg.eval_size;
        d.continual_size = cfg.continual_size;
        d.len_min = cfg.len_min;
        d.len_max = cfg.len_max;
        d.noise = cfg.noise_seq;
        d.continual_shift = cfg.continual_shift;
        d.seed = Rng::mix(cfg.seed ^ Rng::mix(0xbeef00 + task_seed++));
        if (tag_style) {
            d.tag_style = true;
            d.num_tags = num_tags;
            d.tag_offset = next_vocab;
            t.target_count += num_tags;  // tag ids are part of this task's subset
            next_vocab += num_tags;
        }
        reg.tasks.push_back(t);
        reg.data_specs.push_back(d);
    };

    add_cls("cls_a", 4, cfg.cls_a_train_size, cfg.upsample_cls_a);
    add_cls("cls_b", 12, cfg.train_size, 1);
    add_seq("seq", 16, false, 0);
    if (cfg.num_tasks == 7) {
        add_cls("cls_c", 6, cfg.train_size, 1);
        add_cls("cls_d", 24, cfg.train_size, 1);
        add_seq("tag", 16, true, 8);
        add_cls("cls_e", 12, cfg.train_size, 1);
    }
    reg.vocab_size = next_vocab;
    return reg;
}

}  // namespace forge
