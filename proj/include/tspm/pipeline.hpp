#pragma once

#include "tspm/discretize.hpp"
#include "tspm/learn.hpp"
#include "tspm/miner.hpp"
#include "tspm/preprocess.hpp"

namespace tspm {

enum class FeatureMode { FLAT, SPM, CONCAT };

inline std::string_view to_string(FeatureMode m) {
    switch (m) {
        case FeatureMode::FLAT: return "FLAT";
        case FeatureMode::SPM: return "SPM";
        case FeatureMode::CONCAT: return "CONCAT";
    }
    return "FLAT";
}

inline FeatureMode feature_mode_from(std::string_view s) {
    if (s == "FLAT") return FeatureMode::FLAT;
    if (s == "SPM") return FeatureMode::SPM;
    if (s == "CONCAT") return FeatureMode::CONCAT;
    throw std::invalid_argument("unknown feature mode '" + std::string(s) +
                                "' (expected FLAT, SPM or CONCAT)");
}

/// Everything one experiment needs besides the data itself.
struct PipelineConfig {
    PreprocessConfig preprocess;
    MiningConfig mining;
    TrainConfig train;
    double train_fraction = 0.7;
    std::uint64_t split_seed = 0;
};

inline void validate(const PipelineConfig& cfg) {
    validate(cfg.preprocess);
    validate(cfg.mining);
    validate(cfg.train);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    if (cfg.preprocess.use_derivative != cfg.mining.use_derivative)
        throw std::invalid_argument("preprocess and mining disagree on use_derivative");
}

/// Row-wise concatenation, flat columns first; labels must agree row by row.
inline FlatMatrix concat_features(const FlatMatrix& flat, const BinaryFeatures& binary) {
    if (flat.rows != binary.rows)
        throw std::invalid_argument("concat_features: row counts differ (" +
                                    std::to_string(flat.rows) + " vs " +
                                    std::to_string(binary.rows) + ")");
    for (std::size_t i = 0; i < flat.rows; ++i)
        if (flat.row_labels[i] != binary.row_labels[i])
            throw std::invalid_argument("concat_features: row " + std::to_string(i) +
                                        " labels differ");
    FlatMatrix out;
    out.rows = flat.rows;
    out.cols = flat.cols + binary.cols;
    out.values.resize(out.rows * out.cols);
    out.row_labels = flat.row_labels;
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* dst = out.values.data() + i * out.cols;
        const double* src = flat.values.data() + i * flat.cols;
        std::copy(src, src + flat.cols, dst);
        for (std::size_t j = 0; j < binary.cols; ++j)
            dst[flat.cols + j] = static_cast<double>(binary.at(i, j));
    }
    return out;
}

struct PipelineResult {
    Metrics metrics;                     // on the test half
    double train_error = 0.0;
    LinearModelOvR model;
    RankedPatternSet ranked;             // populated for SPM / CONCAT
    std::vector<LevelStats> mining_stats;
    std::vector<std::string> predicted;  // per test instance, dataset order
    std::vector<std::string> truth;
};

/// split -> preprocess -> features per mode -> train -> evaluate.
/// Mining and ranking see only the training half.
inline PipelineResult run_pipeline(const Dataset& ds, const PipelineConfig& cfg,
                                   FeatureMode mode, ModelKind kind) {
    validate(cfg);
    auto [train_raw, test_raw] = split_train_test(ds, cfg.train_fraction, cfg.split_seed);
    const Dataset train = preprocess_dataset(train_raw, cfg.preprocess);
    const Dataset test = preprocess_dataset(test_raw, cfg.preprocess);

    PipelineResult result;
    const auto fit_and_eval = [&](const auto& xtrain, const auto& xtest) {
        result.model = kind == ModelKind::LOGISTIC ? train_logistic_ovr(xtrain, cfg.train)
                                                   : train_svm_ovr(xtrain, cfg.train);
        result.predicted = predict(result.model, xtest);
        result.truth.clear();
        for (const auto& inst : test.instances()) result.truth.push_back(inst.label());
        result.metrics = evaluate(result.predicted, result.truth, ds.labels());
        std::vector<std::string> train_truth;
        for (const auto& inst : train.instances()) train_truth.push_back(inst.label());
        result.train_error =
            evaluate(predict(result.model, xtrain), train_truth, ds.labels()).error;
    };

    if (mode == FeatureMode::FLAT) {
        fit_and_eval(flatten(train), flatten(test));
        return result;
    }

    const Alphabet alphabet(cfg.mining.alphabet_size);
    const auto train_disc = discretize_dataset(train, alphabet);
    const auto test_disc = discretize_dataset(test, alphabet);
    const auto mined = mine_frequent(train_disc, cfg.mining, &result.mining_stats);
    result.ranked = select_top(mined, train_disc, cfg.mining);
    const BinaryFeatures btrain = binarize(train_disc, result.ranked);
    const BinaryFeatures btest = binarize(test_disc, result.ranked);

    if (mode == FeatureMode::SPM) {
        fit_and_eval(btrain, btest);
    } else {
        fit_and_eval(concat_features(flatten(train), btrain),
                     concat_features(flatten(test), btest));
    }
    return result;
}

}  // namespace tspm
