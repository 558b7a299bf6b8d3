#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "tspm/core.hpp"

namespace tspm {

struct PreprocessConfig {
    std::size_t target_frames = 57;
    bool use_derivative = false;
};

inline void validate(const PreprocessConfig& cfg) {
    if (cfg.target_frames < 2) throw std::invalid_argument("target_frames must be >= 2");
}

/// Row per example, frame-major columns: [c1(t1), c2(t1), ..., cK(t1), c1(t2), ...].
struct FlatMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, rows x cols
    std::vector<std::string> row_labels;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

namespace detail {

inline std::vector<std::complex<double>> dft(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

// Inverse transform without the 1/m factor; caller applies the final scale.
inline std::vector<std::complex<double>> idft_unnormalized(
    const std::vector<std::complex<double>>& X) {
    const std::size_t m = X.size();
    std::vector<std::complex<double>> out(m);
    for (std::size_t t = 0; t < m; ++t) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t k = 0; k < m; ++k) {
            double ang = 2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(m);
            acc += X[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[t] = acc;
    }
    return out;
}

}  // namespace detail

/// Spectral resampling: keep the min(n,m) lowest-frequency DFT coefficients,
/// zero the rest, inverse transform, take real parts, scale by m/n. When the
/// kept band ends on a Nyquist bin the aliasing pair is summed (downsample)
/// or split equally (upsample), so real signals stay real.
inline std::vector<double> resample_fourier(std::span<const double> signal, std::size_t m) {
    const std::size_t n = signal.size();
    if (n == 0) throw std::invalid_argument("resample_fourier: empty signal");
    if (m == 0) throw std::invalid_argument("resample_fourier: target length must be >= 1");

    auto X = detail::dft(signal);
    std::vector<std::complex<double>> Y(m, std::complex<double>{0.0, 0.0});
    const std::size_t band = std::min(n, m);
    const std::size_t nyq = band / 2 + 1;
    for (std::size_t k = 0; k < nyq && k < n && k < m; ++k) Y[k] = X[k];
    for (std::size_t t = 1; t + nyq <= band; ++t) Y[m - t] = X[n - t];
    if (band % 2 == 0) {
        if (m < n) {
            Y[band / 2] += X[n - band / 2];  // fold the negative-frequency alias in
        } else if (m > n) {
            Y[band / 2] *= 0.5;  // split the source Nyquist bin across both targets
            Y[m - band / 2] = Y[band / 2];
        }
    }

    auto y = detail::idft_unnormalized(Y);
    const double scale = 1.0 / static_cast<double>(n);  // (m/n) / m
    std::vector<double> out(m);
    for (std::size_t t = 0; t < m; ++t) out[t] = y[t].real() * scale;
    return out;
}

inline TimeSeriesInstance temporal_scale(const TimeSeriesInstance& inst,
                                         std::size_t target_frames) {
    std::vector<double> values(inst.num_channels() * target_frames);
    for (std::size_t c = 0; c < inst.num_channels(); ++c) {
        auto resampled = resample_fourier(inst.channel(c), target_frames);
        std::copy(resampled.begin(), resampled.end(), values.begin() + c * target_frames);
    }
    return TimeSeriesInstance(inst.label(), inst.num_channels(), target_frames,
                              std::move(values), inst.source_id());
}

/// Per-channel, per-instance min-max map to [0,1]. Constant channels
/// (max - min < 1e-12) map to 0.5, the middle discretization bin.
inline TimeSeriesInstance spatial_scale(const TimeSeriesInstance& inst) {
    const std::size_t frames = inst.num_frames();
    std::vector<double> values(inst.num_channels() * frames);
    for (std::size_t c = 0; c < inst.num_channels(); ++c) {
        auto ch = inst.channel(c);
        double lo = ch[0], hi = ch[0];
        for (double v : ch) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-12) {
            for (std::size_t t = 0; t < frames; ++t) values[c * frames + t] = 0.5;
        } else {
            // Direct division so the channel extremes land exactly on 0 and 1.
            for (std::size_t t = 0; t < frames; ++t)
                values[c * frames + t] = std::clamp((ch[t] - lo) / (hi - lo), 0.0, 1.0);
        }
    }
    return TimeSeriesInstance(inst.label(), inst.num_channels(), frames, std::move(values),
                              inst.source_id());
}

/// First differences per channel; frame count drops by one.
inline TimeSeriesInstance differentiate(const TimeSeriesInstance& inst) {
    if (inst.num_frames() < 2)
        throw std::invalid_argument("differentiate requires at least 2 frames");
    const std::size_t frames = inst.num_frames() - 1;
    std::vector<double> values(inst.num_channels() * frames);
    for (std::size_t c = 0; c < inst.num_channels(); ++c) {
        auto ch = inst.channel(c);
        for (std::size_t t = 0; t < frames; ++t) values[c * frames + t] = ch[t + 1] - ch[t];
    }
    return TimeSeriesInstance(inst.label(), inst.num_channels(), frames, std::move(values),
                              inst.source_id());
}

/// temporal_scale -> (differentiate) -> spatial_scale, the order the rest of
/// the pipeline assumes. Differencing shortens by one frame, so the derivative
/// variant resamples to target_frames + 1 first.
inline TimeSeriesInstance preprocess_instance(const TimeSeriesInstance& inst,
                                              const PreprocessConfig& cfg) {
    validate(cfg);
    if (cfg.use_derivative)
        return spatial_scale(differentiate(temporal_scale(inst, cfg.target_frames + 1)));
    return spatial_scale(temporal_scale(inst, cfg.target_frames));
}

inline Dataset preprocess_dataset(const Dataset& ds, const PreprocessConfig& cfg) {
    std::vector<TimeSeriesInstance> out;
    out.reserve(ds.size());
    for (const auto& inst : ds.instances()) out.push_back(preprocess_instance(inst, cfg));
    return Dataset(ds.schema(), std::move(out));
}

inline FlatMatrix flatten(const Dataset& ds) {
    FlatMatrix fm;
    if (ds.size() == 0) return fm;
    const std::size_t frames = ds.instances().front().num_frames();
    const std::size_t channels = ds.schema().num_channels();
    for (const auto& inst : ds.instances())
        if (inst.num_frames() != frames)
            throw std::invalid_argument("flatten requires a uniform frame count; instance '" +
                                        (inst.source_id().empty() ? inst.label()
                                                                  : inst.source_id()) +
                                        "' has " +
                                        std::to_string(inst.num_frames()) + " frames, expected " +
                                        std::to_string(frames));
    fm.rows = ds.size();
    fm.cols = channels * frames;
    fm.values.resize(fm.rows * fm.cols);
    fm.row_labels.reserve(fm.rows);
    for (std::size_t r = 0; r < fm.rows; ++r) {
        const auto& inst = ds.instances()[r];
        fm.row_labels.push_back(inst.label());
        for (std::size_t t = 0; t < frames; ++t)
            for (std::size_t c = 0; c < channels; ++c)
                fm.values[r * fm.cols + t * channels + c] = inst.at(c, t);
    }
    return fm;
}

}  // namespace tspm
