#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "tspm/analysis.hpp"
#include "tspm/synthetic.hpp"

namespace tspm {

/// One experiment, fully described. Loaded from a `key=value` text file
/// (one pair per line, '#' comments); see the repository README for the
/// grammar. `version` and `dataset.source` are always required; subcommands
/// check the keys they depend on via `require`.
struct ExperimentConfig {
    std::size_t version = 0;
    std::string source;  // "synthetic" | "path"
    std::filesystem::path data_path;
    std::filesystem::path schema_path;
    SyntheticSpec synth;
    PipelineConfig pipeline;
    ModelKind model_kind = ModelKind::HINGE;
    FeatureMode feature_mode = FeatureMode::FLAT;
    std::size_t pca_components = 3;
    AblationSpec ablation;
    SweepSpec sweep;
    std::filesystem::path output_dir = "out";
    std::set<std::string> keys_seen;

    bool has(const std::string& key) const { return keys_seen.count(key) != 0; }

    void require(std::initializer_list<const char*> keys) const {
        std::string missing;
        for (const char* key : keys)
            if (!has(key)) missing += missing.empty() ? key : std::string(", ") + key;
        if (!missing.empty())
            throw std::invalid_argument("config is missing required key(s): " + missing);
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::size_t parse_count_value(std::string_view val, const std::string& key) {
    std::string buf(val);
    try {
        std::size_t pos = 0;
        if (buf.empty() || buf[0] == '-') throw std::invalid_argument("negative");
        auto v = std::stoull(buf, &pos);
        if (pos != buf.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' needs a non-negative integer, got '" +
                                    buf + "'");
    }
}

inline double parse_real_value(std::string_view val, const std::string& key) {
    try {
        return parse_number(val, key);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' needs a number, got '" +
                                    std::string(val) + "'");
    }
}

inline bool parse_bool_value(std::string_view val, const std::string& key) {
    if (val == "1" || val == "true") return true;
    if (val == "0" || val == "false") return false;
    throw std::invalid_argument("config key '" + key + "' needs 0/1/true/false, got '" +
                                std::string(val) + "'");
}

inline std::vector<std::size_t> parse_count_list(std::string_view val, const std::string& key) {
    std::vector<std::size_t> out;
    for (auto item : split_char(val, ',')) out.push_back(parse_count_value(trim(item), key));
    return out;
}

// `class,channel,level,start_lo,start_hi,dur_lo,dur_hi`
inline std::pair<std::size_t, PlantSpec> parse_plant_value(std::string_view val,
                                                           const std::string& key) {
    auto parts = split_char(val, ',');
    if (parts.size() != 7)
        throw std::invalid_argument(
            "config key '" + key +
            "' needs 'class,channel,level,start_lo,start_hi,dur_lo,dur_hi', got '" +
            std::string(val) + "'");
    PlantSpec p;
    const std::size_t cls = parse_count_value(trim(parts[0]), key);
    p.channel = parse_count_value(trim(parts[1]), key);
    p.level = plant_level_from(trim(parts[2]));
    p.start_lo = parse_count_value(trim(parts[3]), key);
    p.start_hi = parse_count_value(trim(parts[4]), key);
    p.dur_lo = parse_count_value(trim(parts[5]), key);
    p.dur_hi = parse_count_value(trim(parts[6]), key);
    return {cls, p};
}

}  // namespace detail

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");

    ExperimentConfig cfg;
    std::vector<std::pair<std::size_t, PlantSpec>> plants;
    std::vector<bool> sweep_derivative;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::trim(detail::chomp(line));
        if (sv.empty() || sv.front() == '#') continue;
        auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                        ": expected 'key=value'");
        const std::string key{detail::trim(sv.substr(0, eq))};
        const std::string_view val = detail::trim(sv.substr(eq + 1));
        const auto count = [&] { return detail::parse_count_value(val, key); };
        const auto real = [&] { return detail::parse_real_value(val, key); };
        const auto boolean = [&] { return detail::parse_bool_value(val, key); };
        const auto counts = [&] { return detail::parse_count_list(val, key); };

        if (key == "version") {
            cfg.version = count();
        } else if (key == "dataset.source") {
            if (val != "synthetic" && val != "path")
                throw std::invalid_argument("config key 'dataset.source' must be 'synthetic' or "
                                            "'path', got '" +
                                            std::string(val) + "'");
            cfg.source = std::string(val);
        } else if (key == "dataset.path") {
            cfg.data_path = std::string(val);
        } else if (key == "dataset.schema") {
            cfg.schema_path = std::string(val);
        } else if (key == "synth.num_classes") {
            cfg.synth.num_classes = count();
        } else if (key == "synth.instances_per_class") {
            cfg.synth.instances_per_class = count();
        } else if (key == "synth.num_channels") {
            cfg.synth.num_channels = count();
        } else if (key == "synth.num_frames") {
            cfg.synth.num_frames = count();
        } else if (key == "synth.noise_amplitude") {
            cfg.synth.noise_amplitude = real();
        } else if (key == "synth.seed") {
            cfg.synth.seed = count();
        } else if (key == "synth.plant") {
            plants.push_back(detail::parse_plant_value(val, key));
        } else if (key == "preprocess.target_frames") {
            cfg.pipeline.preprocess.target_frames = count();
        } else if (key == "preprocess.use_derivative") {
            cfg.pipeline.preprocess.use_derivative = boolean();
        } else if (key == "mine.alphabet_size") {
            cfg.pipeline.mining.alphabet_size = count();
        } else if (key == "mine.window") {
            cfg.pipeline.mining.window = count();
        } else if (key == "mine.min_support") {
            cfg.pipeline.mining.min_support = count();
        } else if (key == "mine.max_pattern_length") {
            cfg.pipeline.mining.max_pattern_length = count();
        } else if (key == "mine.max_patterns") {
            cfg.pipeline.mining.max_patterns = count();
        } else if (key == "train.kind") {
            if (val == "svm")
                cfg.model_kind = ModelKind::HINGE;
            else if (val == "logistic")
                cfg.model_kind = ModelKind::LOGISTIC;
            else
                throw std::invalid_argument("config key 'train.kind' must be 'svm' or "
                                            "'logistic', got '" +
                                            std::string(val) + "'");
        } else if (key == "train.l2_lambda") {
            cfg.pipeline.train.l2_lambda = real();
        } else if (key == "train.max_iters") {
            cfg.pipeline.train.max_iters = count();
        } else if (key == "train.tolerance") {
            cfg.pipeline.train.tolerance = real();
        } else if (key == "train.learning_rate") {
            cfg.pipeline.train.learning_rate = real();
        } else if (key == "train.seed") {
            cfg.pipeline.train.seed = count();
        } else if (key == "split.fraction") {
            cfg.pipeline.train_fraction = real();
        } else if (key == "split.seed") {
            cfg.pipeline.split_seed = count();
        } else if (key == "features.mode") {
            cfg.feature_mode = feature_mode_from(val);
        } else if (key == "pca.components") {
            cfg.pca_components = count();
        } else if (key == "ablate.remove") {
            cfg.ablation.remove.push_back(std::string(val));
        } else if (key == "sweep.window") {
            cfg.sweep.window = counts();
        } else if (key == "sweep.min_support") {
            cfg.sweep.min_support = counts();
        } else if (key == "sweep.max_pattern_length") {
            cfg.sweep.max_pattern_length = counts();
        } else if (key == "sweep.max_patterns") {
            cfg.sweep.max_patterns = counts();
        } else if (key == "sweep.alphabet_size") {
            cfg.sweep.alphabet_size = counts();
        } else if (key == "sweep.use_derivative") {
            for (std::size_t v : counts()) sweep_derivative.push_back(v != 0);
        } else if (key == "sweep.passes") {
            cfg.sweep.passes = count();
        } else if (key == "sweep.seed") {
            cfg.sweep.seed = count();
        } else if (key == "output.dir") {
            cfg.output_dir = std::string(val);
        } else {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                        ": unknown config key '" + key + "'");
        }
        cfg.keys_seen.insert(key);
    }

    cfg.require({"version", "dataset.source"});
    if (cfg.version != 1)
        throw std::invalid_argument("unsupported config version " + std::to_string(cfg.version) +
                                    " (this build reads version 1)");
    if (cfg.source == "path") cfg.require({"dataset.path", "dataset.schema"});
    if (cfg.source == "synthetic")
        cfg.require({"synth.num_classes", "synth.instances_per_class", "synth.num_channels",
                     "synth.num_frames"});

    if (cfg.source == "synthetic") {
        cfg.synth.planted_patterns.assign(cfg.synth.num_classes, {});
        for (auto& [cls, plant] : plants) {
            if (cls >= cfg.synth.num_classes)
                throw std::invalid_argument("synth.plant names class " + std::to_string(cls) +
                                            " but synth.num_classes is " +
                                            std::to_string(cfg.synth.num_classes));
            cfg.synth.planted_patterns[cls].push_back(plant);
        }
    }
    if (!sweep_derivative.empty()) cfg.sweep.use_derivative = sweep_derivative;

    // mining always follows the preprocessing variant
    cfg.pipeline.mining.use_derivative = cfg.pipeline.preprocess.use_derivative;
    return cfg;
}

/// Deterministic dump of every effective value, used for the audit trail in
/// emitted reports.
inline std::vector<std::string> resolved_config_lines(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    const auto add = [&](const std::string& key, const std::string& val) {
        out.push_back(key + "=" + val);
    };
    add("version", std::to_string(cfg.version));
    add("dataset.source", cfg.source);
    if (cfg.source == "path") {
        add("dataset.path", cfg.data_path.string());
        add("dataset.schema", cfg.schema_path.string());
    }
    if (cfg.source == "synthetic") {
        add("synth.num_classes", std::to_string(cfg.synth.num_classes));
        add("synth.instances_per_class", std::to_string(cfg.synth.instances_per_class));
        add("synth.num_channels", std::to_string(cfg.synth.num_channels));
        add("synth.num_frames", std::to_string(cfg.synth.num_frames));
        add("synth.noise_amplitude", detail::format_g17(cfg.synth.noise_amplitude));
        add("synth.seed", std::to_string(cfg.synth.seed));
        for (std::size_t cls = 0; cls < cfg.synth.planted_patterns.size(); ++cls)
            for (const auto& p : cfg.synth.planted_patterns[cls])
                add("synth.plant", std::to_string(cls) + "," + std::to_string(p.channel) + "," +
                                       std::string(to_string(p.level)) + "," +
                                       std::to_string(p.start_lo) + "," +
                                       std::to_string(p.start_hi) + "," +
                                       std::to_string(p.dur_lo) + "," + std::to_string(p.dur_hi));
    }
    add("preprocess.target_frames", std::to_string(cfg.pipeline.preprocess.target_frames));
    add("preprocess.use_derivative", cfg.pipeline.preprocess.use_derivative ? "1" : "0");
    add("mine.alphabet_size", std::to_string(cfg.pipeline.mining.alphabet_size));
    add("mine.window", std::to_string(cfg.pipeline.mining.window));
    add("mine.min_support", std::to_string(cfg.pipeline.mining.min_support));
    add("mine.max_pattern_length", std::to_string(cfg.pipeline.mining.max_pattern_length));
    add("mine.max_patterns", std::to_string(cfg.pipeline.mining.max_patterns));
    add("train.kind", cfg.model_kind == ModelKind::HINGE ? "svm" : "logistic");
    add("train.l2_lambda", detail::format_g17(cfg.pipeline.train.l2_lambda));
    add("train.max_iters", std::to_string(cfg.pipeline.train.max_iters));
    add("train.tolerance", detail::format_g17(cfg.pipeline.train.tolerance));
    add("train.learning_rate", detail::format_g17(cfg.pipeline.train.learning_rate));
    add("train.seed", std::to_string(cfg.pipeline.train.seed));
    add("split.fraction", detail::format_g17(cfg.pipeline.train_fraction));
    add("split.seed", std::to_string(cfg.pipeline.split_seed));
    add("features.mode", std::string(to_string(cfg.feature_mode)));
    add("pca.components", std::to_string(cfg.pca_components));
    for (const auto& sel : cfg.ablation.remove) add("ablate.remove", sel);
    if (cfg.has("sweep.window") || cfg.has("sweep.min_support")) {
        const auto join = [](const std::vector<std::size_t>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (i ? "," : "") + std::to_string(v[i]);
            return s;
        };
        add("sweep.window", join(cfg.sweep.window));
        add("sweep.min_support", join(cfg.sweep.min_support));
        add("sweep.max_pattern_length", join(cfg.sweep.max_pattern_length));
        add("sweep.max_patterns", join(cfg.sweep.max_patterns));
        add("sweep.alphabet_size", join(cfg.sweep.alphabet_size));
        std::string derivs;
        for (std::size_t i = 0; i < cfg.sweep.use_derivative.size(); ++i)
            derivs += (i ? "," : "") + std::string(cfg.sweep.use_derivative[i] ? "1" : "0");
        add("sweep.use_derivative", derivs);
        add("sweep.passes", std::to_string(cfg.sweep.passes));
        add("sweep.seed", std::to_string(cfg.sweep.seed));
    }
    return out;
}

}  // namespace tspm
