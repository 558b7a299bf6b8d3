#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tspm/config.hpp"

namespace tspm {

namespace detail {

inline std::uint64_t hash_file_bytes(const std::filesystem::path& path, std::uint64_t h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file '" + path.string() + "'");
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64({buf, static_cast<std::size_t>(in.gcount())}, h);
    return h;
}

}  // namespace detail

/// Content hash of everything the experiment consumes: the dataset files for
/// a path source, the generator parameters for a synthetic one.
inline std::uint64_t input_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    if (cfg.source == "synthetic") {
        for (const auto& line : resolved_config_lines(cfg))
            if (line.rfind("synth.", 0) == 0) h = detail::fnv1a64(line + "\n", h);
        return h;
    }
    h = detail::fnv1a64(cfg.schema_path.filename().string() + '\0', h);
    h = detail::hash_file_bytes(cfg.schema_path, h);
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(cfg.data_path))
        throw std::runtime_error("dataset root '" + cfg.data_path.string() +
                                 "' is not a directory");
    for (const auto& entry : std::filesystem::directory_iterator(cfg.data_path)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() > 4 && name.substr(name.size() - 4) == ".tsv") names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        h = detail::fnv1a64(name + '\0', h);
        h = detail::hash_file_bytes(cfg.data_path / name, h);
    }
    return h;
}

/// Audit trail embedded in every emitted report.
inline std::vector<std::string> audit_lines(const ExperimentConfig& cfg, std::uint64_t hash) {
    std::vector<std::string> out;
    out.push_back("config_version=" + std::to_string(cfg.version));
    out.push_back("input_hash=" + detail::hex64(hash));
    for (const auto& line : resolved_config_lines(cfg)) out.push_back(line);
    return out;
}

inline Dataset load_source(const ExperimentConfig& cfg) {
    if (cfg.source == "synthetic") return generate_synthetic(cfg.synth);
    return load_dataset(cfg.data_path, cfg.schema_path);
}

namespace detail {

inline void require_mining_keys(const ExperimentConfig& cfg) {
    cfg.require({"mine.alphabet_size", "mine.window", "mine.min_support",
                 "mine.max_pattern_length", "mine.max_patterns"});
}

inline std::ofstream open_report(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report file '" + path.string() + "'");
    return out;
}

inline void write_audit(std::ofstream& out, const std::vector<std::string>& audit) {
    for (const auto& line : audit) out << "# " << line << '\n';
}

// manifest: audit trail plus name and content hash of every emitted file
inline void write_manifest(const std::filesystem::path& dir,
                           const std::vector<std::string>& audit) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.txt")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    auto out = open_report(dir / "manifest.txt");
    write_audit(out, audit);
    out << "files=" << names.size() << '\n';
    for (const auto& name : names)
        out << "file=" << name << '\t'
            << hex64(hash_file_bytes(dir / name, 0xcbf29ce484222325ULL)) << '\n';
}

inline RankedPatternSet mine_train_half(const Dataset& ds, const PipelineConfig& cfg,
                                        std::vector<LevelStats>* stats = nullptr) {
    auto [train_raw, test_raw] = split_train_test(ds, cfg.train_fraction, cfg.split_seed);
    const Dataset train = preprocess_dataset(train_raw, cfg.preprocess);
    const Alphabet alphabet(cfg.mining.alphabet_size);
    const auto train_disc = discretize_dataset(train, alphabet);
    const auto mined = mine_frequent(train_disc, cfg.mining, stats);
    return select_top(mined, train_disc, cfg.mining);
}

inline void cmd_eval(const ExperimentConfig& cfg, const Dataset& ds,
                     const std::vector<std::string>& audit) {
    if (cfg.feature_mode != FeatureMode::FLAT) require_mining_keys(cfg);
    const auto result = run_pipeline(ds, cfg.pipeline, cfg.feature_mode, cfg.model_kind);

    auto metrics = open_report(cfg.output_dir / "metrics.txt");
    write_audit(metrics, audit);
    metrics << "precision=" << format_fixed(result.metrics.precision, 6) << '\n'
            << "recall=" << format_fixed(result.metrics.recall, 6) << '\n'
            << "f1=" << format_fixed(result.metrics.f1, 6) << '\n'
            << "training_error=" << format_fixed(result.train_error, 6) << '\n'
            << "testing_error=" << format_fixed(result.metrics.error, 6) << '\n';

    auto confusion = open_report(cfg.output_dir / "confusion.csv");
    write_audit(confusion, audit);
    confusion << "label";
    for (const auto& label : result.metrics.labels) confusion << ',' << label;
    confusion << '\n';
    const std::size_t k = result.metrics.labels.size();
    for (std::size_t r = 0; r < k; ++r) {
        confusion << result.metrics.labels[r];
        for (std::size_t c = 0; c < k; ++c) confusion << ',' << result.metrics.at(r, c);
        confusion << '\n';
    }
}

inline void cmd_pca(const ExperimentConfig& cfg, const Dataset& ds,
                    const std::vector<std::string>& audit) {
    const Dataset pre = preprocess_dataset(ds, cfg.pipeline.preprocess);
    FlatMatrix features;
    if (cfg.feature_mode == FeatureMode::FLAT) {
        features = flatten(pre);
    } else {
        require_mining_keys(cfg);
        const auto ranked = mine_train_half(ds, cfg.pipeline);
        const Alphabet alphabet(cfg.pipeline.mining.alphabet_size);
        const BinaryFeatures bin = binarize(discretize_dataset(pre, alphabet), ranked);
        FlatMatrix as_flat;
        as_flat.rows = bin.rows;
        as_flat.cols = bin.cols;
        as_flat.values.assign(bin.entries.begin(), bin.entries.end());
        as_flat.row_labels = bin.row_labels;
        features = cfg.feature_mode == FeatureMode::SPM ? std::move(as_flat)
                                                        : concat_features(flatten(pre), bin);
    }
    const auto pca = pca_project(features, cfg.pca_components);

    auto out = open_report(cfg.output_dir / "pca.csv");
    write_audit(out, audit);
    std::string variances;
    for (std::size_t p = 0; p < pca.k; ++p)
        variances += (p ? "," : "") + format_g17(pca.explained_variance[p]);
    out << "# explained_variance=" << variances << '\n';
    static const char* axis[] = {"x", "y", "z"};
    for (std::size_t p = 0; p < pca.k; ++p) {
        const std::string name = p < 3 ? axis[p] : "c" + std::to_string(p + 1);
        out << (p ? "," : "") << name;
    }
    out << ",label\n";
    for (std::size_t i = 0; i < pca.n; ++i) {
        for (std::size_t p = 0; p < pca.k; ++p)
            out << (p ? "," : "") << format_fixed(pca.projected[i * pca.k + p], 6);
        out << ',' << pca.row_labels[i] << '\n';
    }
}

inline void cmd_ablate(const ExperimentConfig& cfg, const Dataset& ds,
                       const std::vector<std::string>& audit) {
    cfg.require({"ablate.remove"});
    const auto rows = ablate(ds, cfg.ablation, cfg.pipeline);
    auto out = open_report(cfg.output_dir / "ablation.csv");
    write_audit(out, audit);
    out << "removed_groups,test_error\n";
    for (const auto& row : rows)
        out << row.removed << ',' << format_fixed(row.test_error, 6) << '\n';
}

inline void cmd_sweep(const ExperimentConfig& cfg, const Dataset& ds,
                      const std::vector<std::string>& audit) {
    cfg.require({"sweep.window", "sweep.min_support", "sweep.max_pattern_length",
                 "sweep.max_patterns", "sweep.alphabet_size", "sweep.use_derivative"});
    const auto result = tune_coordinate_ascent(ds, cfg.sweep, cfg.pipeline);

    auto trace = open_report(cfg.output_dir / "sweep_trace.csv");
    write_audit(trace, audit);
    trace << "window,min_support,max_pattern_length,max_patterns,alphabet_size,use_derivative,"
             "accuracy\n";
    for (const auto& [m, acc] : result.trace)
        trace << m.window << ',' << m.min_support << ',' << m.max_pattern_length << ','
              << m.max_patterns << ',' << m.alphabet_size << ',' << (m.use_derivative ? 1 : 0)
              << ',' << format_fixed(acc, 6) << '\n';

    auto best = open_report(cfg.output_dir / "sweep_best.txt");
    write_audit(best, audit);
    best << "window=" << result.best.window << '\n'
         << "min_support=" << result.best.min_support << '\n'
         << "max_pattern_length=" << result.best.max_pattern_length << '\n'
         << "max_patterns=" << result.best.max_patterns << '\n'
         << "alphabet_size=" << result.best.alphabet_size << '\n'
         << "use_derivative=" << (result.best.use_derivative ? 1 : 0) << '\n'
         << "accuracy=" << format_fixed(result.best_accuracy, 6) << '\n';
}

}  // namespace detail

/// Executes one subcommand against a loaded config. Returns 0 on success;
/// failures surface as exceptions for the binary's main to report.
inline int run(const std::string& subcommand, ExperimentConfig cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    const auto audit = audit_lines(cfg, input_hash(cfg));

    if (subcommand == "synth") {
        if (cfg.source != "synthetic")
            throw std::invalid_argument("subcommand 'synth' needs dataset.source=synthetic");
        const Dataset ds = generate_synthetic(cfg.synth);
        const auto dir = cfg.output_dir / "dataset";
        write_dataset(dir, ds);
        detail::write_manifest(dir, audit);
        return 0;
    }

    const Dataset ds = load_source(cfg);
    if (subcommand == "preprocess") {
        const auto dir = cfg.output_dir / "preprocessed";
        write_dataset(dir, preprocess_dataset(ds, cfg.pipeline.preprocess));
        detail::write_manifest(dir, audit);
    } else if (subcommand == "mine") {
        detail::require_mining_keys(cfg);
        validate(cfg.pipeline);
        const auto ranked = detail::mine_train_half(ds, cfg.pipeline);
        write_pattern_file(cfg.output_dir / "patterns.tsv", ranked, audit);
    } else if (subcommand == "train") {
        if (cfg.feature_mode != FeatureMode::FLAT) detail::require_mining_keys(cfg);
        const auto result = run_pipeline(ds, cfg.pipeline, cfg.feature_mode, cfg.model_kind);
        write_model_file(cfg.output_dir / "model.tsv", result.model, audit);
    } else if (subcommand == "eval") {
        detail::cmd_eval(cfg, ds, audit);
    } else if (subcommand == "ablate") {
        detail::cmd_ablate(cfg, ds, audit);
    } else if (subcommand == "sweep") {
        detail::cmd_sweep(cfg, ds, audit);
    } else if (subcommand == "pca") {
        detail::cmd_pca(cfg, ds, audit);
    } else {
        throw std::invalid_argument(
            "unknown subcommand '" + subcommand +
            "' (expected synth, preprocess, mine, train, eval, ablate, sweep or pca)");
    }
    return 0;
}

inline int run(const std::string& subcommand, const std::filesystem::path& config_path,
               const std::filesystem::path& out_override = {}) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    return run(subcommand, std::move(cfg));
}

}  // namespace tspm
