#pragma once

#include <functional>
#include <map>
#include <numeric>

#include "tspm/pipeline.hpp"

namespace tspm {

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaResult {
    std::size_t n = 0, k = 0, d = 0;
    std::vector<double> projected;           // n x k, row-major
    std::vector<double> components;          // k x d, row-major, orthonormal rows
    std::vector<double> explained_variance;  // length k, non-increasing
    std::vector<std::string> row_labels;
};

/// Top-k principal components by power iteration with deflation on the
/// (1/(n-1))-normalized covariance, applied implicitly through the centered
/// data. Components are re-orthogonalized every step and sign-fixed so each
/// one's largest-magnitude entry is positive.
inline PcaResult pca_project(const FlatMatrix& x, std::size_t k = 3) {
    const std::size_t n = x.rows, d = x.cols;
    if (n < 2) throw std::invalid_argument("pca_project requires at least 2 rows");
    if (k == 0 || k > std::min(n - 1, d))
        throw std::invalid_argument("pca_project: k must lie in [1, min(rows-1, cols)]");

    std::vector<double> centered = x.values;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += centered[i * d + j];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered[i * d + j] -= mean;
    }

    double total_var = 0.0;
    for (double v : centered) total_var += v * v;
    total_var /= static_cast<double>(n - 1);
    if (total_var < 1e-24)
        throw std::invalid_argument("pca_project: all rows are identical (zero variance)");

    PcaResult res;
    res.n = n;
    res.k = k;
    res.d = d;
    res.row_labels = x.row_labels;
    res.components.assign(k * d, 0.0);
    res.explained_variance.assign(k, 0.0);

    // C v computed as X^T (X v) / (n-1), then deflated by found components.
    std::vector<double> xv(n), cv(d);
    const auto apply_cov = [&](const std::vector<double>& v, std::size_t found) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = centered.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * v[j];
            xv[i] = acc;
        }
        std::fill(cv.begin(), cv.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = centered.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) cv[j] += xv[i] * row[j];
        }
        const double inv = 1.0 / static_cast<double>(n - 1);
        for (double& c : cv) c *= inv;
        for (std::size_t p = 0; p < found; ++p) {
            const double* u = res.components.data() + p * d;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
            const double lam = res.explained_variance[p];
            for (std::size_t j = 0; j < d; ++j) cv[j] -= lam * dot * u[j];
        }
    };

    const auto orthonormalize = [&](std::vector<double>& v, std::size_t found) {
        for (std::size_t p = 0; p < found; ++p) {
            const double* u = res.components.data() + p * d;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
            for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
        }
        double norm = 0.0;
        for (double e : v) norm += e * e;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& e : v) e /= norm;
        return norm;
    };

    for (std::size_t p = 0; p < k; ++p) {
        // deterministic start vector per component
        auto rng = detail::make_rng(detail::mix64(0x70636100u, p));
        std::vector<double> v(d);
        for (double& e : v) e = detail::uniform01(rng) - 0.5;
        if (orthonormalize(v, p) == 0.0) v[p % d] = 1.0, orthonormalize(v, p);

        double lambda = 0.0;
        for (std::size_t iter = 0; iter < 10000; ++iter) {
            apply_cov(v, p);
            std::vector<double> next = cv;
            const double norm = orthonormalize(next, p);
            if (norm < 1e-30) {
                // remaining subspace carries no variance; keep v as an
                // arbitrary orthonormal completion with eigenvalue 0
                lambda = 0.0;
                break;
            }
            double delta = 0.0;
            for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::fabs(next[j] - v[j]));
            v = std::move(next);
            lambda = norm;
            if (delta < 1e-10) break;
        }
        // Rayleigh quotient is more accurate than the iteration norm
        apply_cov(v, p);
        double rq = 0.0;
        for (std::size_t j = 0; j < d; ++j) rq += v[j] * cv[j];
        lambda = std::max(rq, 0.0);

        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::fabs(v[j]) > std::fabs(v[arg])) arg = j;
        if (v[arg] < 0.0)
            for (double& e : v) e = -e;

        std::copy(v.begin(), v.end(), res.components.begin() + p * d);
        res.explained_variance[p] = lambda;
    }

    res.projected.assign(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* row = centered.data() + i * d;
            const double* u = res.components.data() + p * d;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * u[j];
            res.projected[i * k + p] = acc;
        }
    return res;
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

/// Selectors name either a channel-group tag (POS, ROT, FINGER, OTHER) or an
/// exact channel name; each selector must match at least one channel.
struct AblationSpec {
    std::vector<std::string> remove;
};

struct AblationRow {
    std::string removed;  // "none", one selector, or "a+b+c" cumulative
    double test_error = 0.0;
};

namespace detail {

inline std::vector<std::size_t> channels_matching(const ChannelSchema& schema,
                                                  const std::string& selector) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < schema.num_channels(); ++c) {
        const auto& def = schema.channel(c);
        if (def.name == selector || to_string(def.group) == selector) out.push_back(c);
    }
    if (out.empty())
        throw std::invalid_argument("ablation selector '" + selector +
                                    "' matches no channel group or name in the schema");
    return out;
}

inline Dataset drop_channels(const Dataset& ds, const std::vector<bool>& drop) {
    std::vector<ChannelDef> kept;
    for (std::size_t c = 0; c < ds.schema().num_channels(); ++c)
        if (!drop[c]) kept.push_back(ds.schema().channel(c));
    if (kept.empty()) throw std::invalid_argument("ablation would remove every channel");
    ChannelSchema schema{kept};
    std::vector<TimeSeriesInstance> instances;
    instances.reserve(ds.size());
    for (const auto& inst : ds.instances()) {
        std::vector<double> values;
        values.reserve(kept.size() * inst.num_frames());
        for (std::size_t c = 0; c < inst.num_channels(); ++c)
            if (!drop[c]) {
                auto ch = inst.channel(c);
                values.insert(values.end(), ch.begin(), ch.end());
            }
        instances.emplace_back(inst.label(), kept.size(), inst.num_frames(), std::move(values),
                               inst.source_id());
    }
    return Dataset(std::move(schema), std::move(instances));
}

}  // namespace detail

/// Flattened-feature SVM error with channels removed: baseline first, then
/// each selector alone, then cumulative prefixes of the selector list.
inline std::vector<AblationRow> ablate(const Dataset& ds, const AblationSpec& spec,
                                       const PipelineConfig& cfg) {
    validate(cfg);
    if (spec.remove.empty())
        throw std::invalid_argument("ablation spec lists no channel selectors");
    std::vector<std::vector<std::size_t>> matched;
    for (const auto& sel : spec.remove)
        matched.push_back(detail::channels_matching(ds.schema(), sel));

    const auto run_row = [&](const std::string& name, const std::vector<bool>& drop) {
        const Dataset subset = std::any_of(drop.begin(), drop.end(), [](bool b) { return b; })
                                   ? detail::drop_channels(ds, drop)
                                   : ds;
        auto result = run_pipeline(subset, cfg, FeatureMode::FLAT, ModelKind::HINGE);
        return AblationRow{name, result.metrics.error};
    };

    std::vector<AblationRow> rows;
    rows.push_back(run_row("none", std::vector<bool>(ds.schema().num_channels(), false)));
    for (std::size_t i = 0; i < spec.remove.size(); ++i) {
        std::vector<bool> drop(ds.schema().num_channels(), false);
        for (std::size_t c : matched[i]) drop[c] = true;
        rows.push_back(run_row(spec.remove[i], drop));
    }
    std::vector<bool> drop(ds.schema().num_channels(), false);
    std::string name;
    for (std::size_t i = 0; i < spec.remove.size(); ++i) {
        for (std::size_t c : matched[i]) drop[c] = true;
        name = name.empty() ? spec.remove[i] : name + "+" + spec.remove[i];
        if (i > 0) rows.push_back(run_row(name, drop));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Coordinate-ascent tuning
// ---------------------------------------------------------------------------

struct SweepSpec {
    std::vector<std::size_t> window;
    std::vector<std::size_t> min_support;
    std::vector<std::size_t> max_pattern_length;
    std::vector<std::size_t> max_patterns;
    std::vector<std::size_t> alphabet_size;
    std::vector<bool> use_derivative;
    std::size_t passes = 1;
    std::uint64_t seed = 0;
};

inline void validate(const SweepSpec& spec) {
    if (spec.window.empty() || spec.min_support.empty() || spec.max_pattern_length.empty() ||
        spec.max_patterns.empty() || spec.alphabet_size.empty() || spec.use_derivative.empty())
        throw std::invalid_argument("every sweep candidate list must be non-empty");
    if (spec.passes < 1) throw std::invalid_argument("sweep passes must be >= 1");
}

struct AscentResult {
    std::vector<std::size_t> best;  // index per parameter
    double best_value = 0.0;
    std::vector<std::pair<std::vector<std::size_t>, double>> trace;
};

/// Cycles the parameters in order, evaluating every candidate for the current
/// parameter with the rest fixed, moving to the argmax (ties favor the
/// earlier candidate). Stops after `passes` cycles or the first cycle that
/// changes nothing. Repeat evaluations hit a cache but still land in the
/// trace; the trace therefore records every evaluation in order.
inline AscentResult coordinate_ascent_indices(
    const std::vector<std::size_t>& list_sizes, std::size_t passes,
    const std::function<double(const std::vector<std::size_t>&)>& objective) {
    if (list_sizes.empty()) throw std::invalid_argument("coordinate ascent needs parameters");
    for (std::size_t s : list_sizes)
        if (s == 0) throw std::invalid_argument("coordinate ascent candidate list is empty");

    AscentResult res;
    res.best.assign(list_sizes.size(), 0);
    std::map<std::vector<std::size_t>, double> cache;
    const auto eval = [&](const std::vector<std::size_t>& idx) {
        auto it = cache.find(idx);
        const double value = it != cache.end() ? it->second : (cache[idx] = objective(idx));
        res.trace.emplace_back(idx, value);
        return value;
    };

    res.best_value = 0.0;
    bool have_value = false;
    for (std::size_t pass = 0; pass < passes; ++pass) {
        bool changed = false;
        for (std::size_t param = 0; param < list_sizes.size(); ++param) {
            std::size_t arg = 0;
            double best = 0.0;
            for (std::size_t cand = 0; cand < list_sizes[param]; ++cand) {
                auto idx = res.best;
                idx[param] = cand;
                const double value = eval(idx);
                if (cand == 0 || value > best) {
                    best = value;
                    arg = cand;
                }
            }
            if (arg != res.best[param]) changed = true;
            res.best[param] = arg;
            res.best_value = best;
            have_value = true;
        }
        if (!changed) break;
    }
    if (!have_value) res.best_value = eval(res.best);
    return res;
}

struct TuneResult {
    MiningConfig best;
    double best_accuracy = 0.0;
    std::vector<std::pair<MiningConfig, double>> trace;
};

/// Full SPM+SVM pipeline accuracy as the ascent objective. The sweep seed
/// fixes the train/test split; base supplies everything the sweep does not
/// vary.
inline TuneResult tune_coordinate_ascent(const Dataset& ds, const SweepSpec& spec,
                                         const PipelineConfig& base) {
    validate(spec);
    const auto resolve = [&](const std::vector<std::size_t>& idx) {
        MiningConfig m = base.mining;
        m.window = spec.window[idx[0]];
        m.min_support = spec.min_support[idx[1]];
        m.max_pattern_length = spec.max_pattern_length[idx[2]];
        m.max_patterns = spec.max_patterns[idx[3]];
        m.alphabet_size = spec.alphabet_size[idx[4]];
        m.use_derivative = spec.use_derivative[idx[5]];
        return m;
    };
    const auto objective = [&](const std::vector<std::size_t>& idx) {
        PipelineConfig cfg = base;
        cfg.mining = resolve(idx);
        cfg.preprocess.use_derivative = cfg.mining.use_derivative;
        cfg.split_seed = spec.seed;
        validate(cfg);
        auto result = run_pipeline(ds, cfg, FeatureMode::SPM, ModelKind::HINGE);
        return 1.0 - result.metrics.error;
    };

    const std::vector<std::size_t> sizes = {spec.window.size(),          spec.min_support.size(),
                                            spec.max_pattern_length.size(), spec.max_patterns.size(),
                                            spec.alphabet_size.size(),   spec.use_derivative.size()};
    auto ascent = coordinate_ascent_indices(sizes, spec.passes, objective);

    TuneResult out;
    out.best = resolve(ascent.best);
    out.best_accuracy = ascent.best_value;
    out.trace.reserve(ascent.trace.size());
    for (const auto& [idx, value] : ascent.trace) out.trace.emplace_back(resolve(idx), value);
    return out;
}

}  // namespace tspm
