#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tspm/miner.hpp"
#include "tspm/preprocess.hpp"

namespace tspm {

struct TrainConfig {
    double l2_lambda = 1e-3;
    std::size_t max_iters = 500;
    double tolerance = 1e-6;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.l2_lambda < 0.0) throw std::invalid_argument("l2_lambda must be >= 0");
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
}

enum class ModelKind { LOGISTIC, HINGE };

inline std::string_view to_string(ModelKind k) {
    return k == ModelKind::LOGISTIC ? "LOGISTIC" : "HINGE";
}

inline ModelKind model_kind_from(std::string_view s) {
    if (s == "LOGISTIC") return ModelKind::LOGISTIC;
    if (s == "HINGE") return ModelKind::HINGE;
    throw std::invalid_argument("unknown model kind '" + std::string(s) + "'");
}

struct ClassWeights {
    std::string label;
    double bias = 0.0;
    std::vector<double> weights;
};

/// One binary linear scorer per vocabulary label, stored in canonical
/// (lexicographic) label order.
struct LinearModelOvR {
    ModelKind kind = ModelKind::LOGISTIC;
    TrainConfig config;
    std::vector<ClassWeights> classes;

    std::size_t dimension() const { return classes.empty() ? 0 : classes[0].weights.size(); }
};

namespace detail {

struct BinaryProblem {
    std::size_t rows = 0;
    std::size_t cols = 0;
    const double* x = nullptr;              // row-major
    std::vector<double> y;                  // +1 / -1 per row
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow
inline double log1p_exp_neg(double m) {
    if (m > 0.0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

// mean log-loss + (lambda/2)|w|^2, bias unpenalized
inline double logistic_objective(const BinaryProblem& prob, const std::vector<double>& w,
                                 double b, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < prob.rows; ++i) {
        const double* row = prob.x + i * prob.cols;
        double z = b;
        for (std::size_t j = 0; j < prob.cols; ++j) z += w[j] * row[j];
        loss += log1p_exp_neg(prob.y[i] * z);
    }
    loss /= static_cast<double>(prob.rows);
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return loss + 0.5 * lambda * reg;
}

// gradient of logistic_objective; returns (grad_w, grad_b)
inline std::pair<std::vector<double>, double> logistic_gradient(const BinaryProblem& prob,
                                                                const std::vector<double>& w,
                                                                double b, double lambda) {
    std::vector<double> gw(prob.cols, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < prob.rows; ++i) {
        const double* row = prob.x + i * prob.cols;
        double z = b;
        for (std::size_t j = 0; j < prob.cols; ++j) z += w[j] * row[j];
        // d/dz log(1+exp(-y z)) = -y * sigmoid(-y z)
        const double coef = -prob.y[i] * sigmoid(-prob.y[i] * z);
        for (std::size_t j = 0; j < prob.cols; ++j) gw[j] += coef * row[j];
        gb += coef;
    }
    const double inv_n = 1.0 / static_cast<double>(prob.rows);
    for (std::size_t j = 0; j < prob.cols; ++j) gw[j] = gw[j] * inv_n + lambda * w[j];
    gb *= inv_n;
    return {std::move(gw), gb};
}

inline ClassWeights train_logistic_binary(const BinaryProblem& prob, const TrainConfig& cfg,
                                          std::string label) {
    std::vector<double> w(prob.cols, 0.0);
    double b = 0.0;
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        auto [gw, gb] = logistic_gradient(prob, w, b, cfg.l2_lambda);
        double gmax = std::fabs(gb);
        for (double g : gw) gmax = std::max(gmax, std::fabs(g));
        if (gmax < cfg.tolerance) break;
        for (std::size_t j = 0; j < prob.cols; ++j) w[j] -= cfg.learning_rate * gw[j];
        b -= cfg.learning_rate * gb;
    }
    return {std::move(label), b, std::move(w)};
}

inline ClassWeights train_hinge_binary(const BinaryProblem& prob, const TrainConfig& cfg,
                                       std::string label) {
    std::vector<double> w(prob.cols, 0.0);
    double b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(prob.rows);
    // decaying schedule, t starting at 1 so eta_t * lambda < 1 for any lambda
    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        const double eta =
            cfg.learning_rate / (1.0 + static_cast<double>(iter) * cfg.l2_lambda);
        std::vector<double> gw(prob.cols, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < prob.rows; ++i) {
            const double* row = prob.x + i * prob.cols;
            double z = b;
            for (std::size_t j = 0; j < prob.cols; ++j) z += w[j] * row[j];
            if (prob.y[i] * z < 1.0) {  // hinge active strictly inside the margin
                for (std::size_t j = 0; j < prob.cols; ++j) gw[j] -= prob.y[i] * row[j];
                gb -= prob.y[i];
            }
        }
        for (std::size_t j = 0; j < prob.cols; ++j)
            w[j] -= eta * (gw[j] * inv_n + cfg.l2_lambda * w[j]);
        b -= eta * gb * inv_n;
    }
    return {std::move(label), b, std::move(w)};
}

struct FeatureView {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> storage;            // used when converting from bytes
    const double* values = nullptr;          // row-major
    const std::vector<std::string>* labels = nullptr;
};

inline FeatureView feature_view(const FlatMatrix& x) {
    FeatureView v;
    v.rows = x.rows;
    v.cols = x.cols;
    v.values = x.values.data();
    v.labels = &x.row_labels;
    return v;
}

inline FeatureView feature_view(const BinaryFeatures& x) {
    FeatureView v;
    v.rows = x.rows;
    v.cols = x.cols;
    v.storage.assign(x.entries.begin(), x.entries.end());
    v.values = v.storage.data();
    v.labels = &x.row_labels;
    return v;
}

inline LinearModelOvR train_ovr(const FeatureView& view, const TrainConfig& cfg,
                                ModelKind kind) {
    validate(cfg);
    if (view.rows == 0) throw std::invalid_argument("cannot train on an empty feature matrix");
    for (std::size_t i = 0; i < view.rows * view.cols; ++i)
        if (!std::isfinite(view.values[i]))
            throw std::invalid_argument("feature matrix contains a non-finite value");

    std::set<std::string> vocab(view.labels->begin(), view.labels->end());
    if (vocab.size() < 2)
        throw std::invalid_argument("training requires at least 2 classes, found " +
                                    std::to_string(vocab.size()));

    LinearModelOvR model;
    model.kind = kind;
    model.config = cfg;
    for (const std::string& label : vocab) {
        BinaryProblem prob;
        prob.rows = view.rows;
        prob.cols = view.cols;
        prob.x = view.values;
        prob.y.reserve(view.rows);
        for (const auto& l : *view.labels) prob.y.push_back(l == label ? 1.0 : -1.0);
        model.classes.push_back(kind == ModelKind::LOGISTIC
                                    ? train_logistic_binary(prob, cfg, label)
                                    : train_hinge_binary(prob, cfg, label));
    }
    return model;
}

}  // namespace detail

inline LinearModelOvR train_logistic_ovr(const FlatMatrix& x, const TrainConfig& cfg) {
    return detail::train_ovr(detail::feature_view(x), cfg, ModelKind::LOGISTIC);
}
inline LinearModelOvR train_logistic_ovr(const BinaryFeatures& x, const TrainConfig& cfg) {
    return detail::train_ovr(detail::feature_view(x), cfg, ModelKind::LOGISTIC);
}
inline LinearModelOvR train_svm_ovr(const FlatMatrix& x, const TrainConfig& cfg) {
    return detail::train_ovr(detail::feature_view(x), cfg, ModelKind::HINGE);
}
inline LinearModelOvR train_svm_ovr(const BinaryFeatures& x, const TrainConfig& cfg) {
    return detail::train_ovr(detail::feature_view(x), cfg, ModelKind::HINGE);
}

/// Argmax of raw per-class scores; exact ties go to the lexicographically
/// smaller label, independent of storage order.
inline std::vector<std::string> predict(const LinearModelOvR& model, const double* values,
                                        std::size_t rows, std::size_t cols) {
    if (model.classes.empty()) throw std::invalid_argument("predict: model has no classes");
    if (cols != model.dimension())
        throw std::invalid_argument("predict: feature dimension " + std::to_string(cols) +
                                    " does not match model dimension " +
                                    std::to_string(model.dimension()));
    std::vector<std::string> out;
    out.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = values + i * cols;
        const std::string* best_label = nullptr;
        double best = 0.0;
        for (const auto& cw : model.classes) {
            double z = cw.bias;
            for (std::size_t j = 0; j < cols; ++j) z += cw.weights[j] * row[j];
            if (!best_label || z > best || (z == best && cw.label < *best_label)) {
                best = z;
                best_label = &cw.label;
            }
        }
        out.push_back(*best_label);
    }
    return out;
}

inline std::vector<std::string> predict(const LinearModelOvR& model, const FlatMatrix& x) {
    return predict(model, x.values.data(), x.rows, x.cols);
}
inline std::vector<std::string> predict(const LinearModelOvR& model, const BinaryFeatures& x) {
    auto view = detail::feature_view(x);
    return predict(model, view.values, view.rows, view.cols);
}

struct Metrics {
    std::vector<std::string> labels;      // vocabulary, canonical order
    std::vector<std::size_t> confusion;   // row-major CxC, rows = truth
    double precision = 0.0;               // macro
    double recall = 0.0;                  // macro
    double f1 = 0.0;                      // macro
    double error = 0.0;

    std::size_t at(std::size_t truth, std::size_t pred) const {
        return confusion[truth * labels.size() + pred];
    }
};

inline Metrics evaluate(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& truth,
                        const std::vector<std::string>& vocabulary) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("evaluate: predicted and truth lengths differ");
    if (truth.empty()) throw std::invalid_argument("evaluate: empty inputs");

    Metrics m;
    m.labels = vocabulary;
    std::sort(m.labels.begin(), m.labels.end());
    const std::size_t k = m.labels.size();
    const auto index_of = [&](const std::string& label) {
        auto it = std::lower_bound(m.labels.begin(), m.labels.end(), label);
        if (it == m.labels.end() || *it != label)
            throw std::invalid_argument("evaluate: label '" + label + "' not in vocabulary");
        return static_cast<std::size_t>(it - m.labels.begin());
    };

    m.confusion.assign(k * k, 0);
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++m.confusion[index_of(truth[i]) * k + index_of(predicted[i])];

    double psum = 0.0, rsum = 0.0, fsum = 0.0;
    std::size_t diag = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = m.confusion[c * k + c];
        std::size_t col = 0, row = 0;
        for (std::size_t o = 0; o < k; ++o) {
            col += m.confusion[o * k + c];
            row += m.confusion[c * k + o];
        }
        const double p = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        const double r = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        psum += p;
        rsum += r;
        fsum += (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
        diag += tp;
    }
    m.precision = psum / static_cast<double>(k);
    m.recall = rsum / static_cast<double>(k);
    m.f1 = fsum / static_cast<double>(k);
    m.error = 1.0 - static_cast<double>(diag) / static_cast<double>(truth.size());
    return m;
}

// ---------------------------------------------------------------------------
// Model file: '#' header (kind, config, dimensions), optional further '#'
// audit lines, then one line per class: label, bias, weights, tab-separated,
// printed with 17 significant digits so reads round-trip exactly.
// ---------------------------------------------------------------------------

inline void write_model_file(const std::filesystem::path& path, const LinearModelOvR& model,
                             const std::vector<std::string>& audit_lines = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file '" + path.string() + "'");
    out << "# kind=" << to_string(model.kind)
        << " l2_lambda=" << detail::format_g17(model.config.l2_lambda)
        << " max_iters=" << model.config.max_iters
        << " tolerance=" << detail::format_g17(model.config.tolerance)
        << " learning_rate=" << detail::format_g17(model.config.learning_rate)
        << " seed=" << model.config.seed << " classes=" << model.classes.size()
        << " dim=" << model.dimension() << '\n';
    for (const auto& line : audit_lines) out << "# " << line << '\n';
    for (const auto& cw : model.classes) {
        out << cw.label << '\t' << detail::format_g17(cw.bias);
        for (double w : cw.weights) out << '\t' << detail::format_g17(w);
        out << '\n';
    }
}

inline LinearModelOvR read_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("model file '" + path.string() + "' is empty");

    LinearModelOvR model;
    std::size_t dim = 0;
    {
        std::string_view sv = detail::chomp(line);
        if (sv.substr(0, 2) != "# ")
            throw std::runtime_error(path.string() + ":1: expected a '# key=value ...' header");
        for (auto token : detail::split_char(sv.substr(2), ' ')) {
            auto eq = token.find('=');
            if (eq == std::string_view::npos) continue;
            std::string key(token.substr(0, eq));
            std::string val(token.substr(eq + 1));
            if (key == "kind")
                model.kind = model_kind_from(val);
            else if (key == "l2_lambda")
                model.config.l2_lambda = detail::parse_number(val, path.string() + ":1");
            else if (key == "max_iters")
                model.config.max_iters = static_cast<std::size_t>(std::stoull(val));
            else if (key == "tolerance")
                model.config.tolerance = detail::parse_number(val, path.string() + ":1");
            else if (key == "learning_rate")
                model.config.learning_rate = detail::parse_number(val, path.string() + ":1");
            else if (key == "seed")
                model.config.seed = std::stoull(val);
            else if (key == "dim")
                dim = static_cast<std::size_t>(std::stoull(val));
            else if (key != "classes")
                throw std::runtime_error(path.string() + ":1: unknown header key '" + key + "'");
        }
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::chomp(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto cells = detail::split_char(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() != dim + 2)
            throw std::runtime_error(where + ": expected label, bias and " + std::to_string(dim) +
                                     " weights");
        ClassWeights cw;
        cw.label = std::string(cells[0]);
        cw.bias = detail::parse_number(cells[1], where);
        cw.weights.reserve(dim);
        for (std::size_t j = 0; j < dim; ++j)
            cw.weights.push_back(detail::parse_number(cells[2 + j], where));
        model.classes.push_back(std::move(cw));
    }
    if (model.classes.empty())
        throw std::runtime_error("model file '" + path.string() + "' defines no classes");
    return model;
}

}  // namespace tspm
