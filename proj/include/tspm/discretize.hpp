#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tspm/core.hpp"

namespace tspm {

/// Equal-width partition of [0,1]. Bins are half-open [lo, hi) except the
/// last, which closes at 1, so every value in [0,1] lands in exactly one bin.
class Alphabet {
public:
    explicit Alphabet(std::size_t size) : size_(size) {
        if (size == 3)
            symbols_ = {"L", "M", "H"};
        else if (size == 5)
            symbols_ = {"VL", "L", "M", "H", "VH"};
        else
            throw std::invalid_argument("alphabet size must be 3 or 5");
        for (std::size_t i = 0; i < size_; ++i)
            edges_.push_back(static_cast<double>(i) / static_cast<double>(size_));
    }

    std::size_t size() const { return size_; }
    const std::vector<std::string>& symbols() const { return symbols_; }
    const std::string& symbol(std::size_t i) const { return symbols_.at(i); }

    std::size_t symbol_index(std::string_view s) const {
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            if (symbols_[i] == s) return i;
        throw std::invalid_argument("symbol '" + std::string(s) + "' not in alphabet");
    }

    std::size_t bin(double v) const {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("value " + detail::format_g17(v) +
                                        " outside [0,1]; discretization requires scaled input");
        // Bin i covers [i/size, (i+1)/size), the last closed at 1. Comparing
        // against the i/size doubles directly keeps boundary values in the
        // upper bin.
        for (std::size_t i = size_ - 1; i > 0; --i)
            if (v >= edges_[i]) return i;
        return 0;
    }

private:
    std::size_t size_;
    std::vector<std::string> symbols_;
    std::vector<double> edges_;
};

/// Maximal same-symbol segment of one channel, inclusive frame extents.
struct Run {
    std::size_t symbol = 0;  // alphabet symbol index
    std::size_t channel = 0;
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;
};

struct DiscretizedInstance {
    std::string label;
    std::size_t num_frames = 0;
    std::vector<std::vector<Run>> channels;  // runs per channel, in frame order
};

inline std::vector<std::size_t> discretize_channel(std::span<const double> signal,
                                                   const Alphabet& alphabet) {
    std::vector<std::size_t> out;
    out.reserve(signal.size());
    for (double v : signal) out.push_back(alphabet.bin(v));
    return out;
}

inline std::vector<Run> collapse_runs(const std::vector<std::size_t>& symbols,
                                      std::size_t channel) {
    if (symbols.empty()) throw std::invalid_argument("collapse_runs: empty symbol sequence");
    std::vector<Run> runs;
    std::size_t start = 0;
    for (std::size_t t = 1; t <= symbols.size(); ++t) {
        if (t == symbols.size() || symbols[t] != symbols[start]) {
            runs.push_back({symbols[start], channel, start, t - 1});
            start = t;
        }
    }
    return runs;
}

inline DiscretizedInstance discretize_instance(const TimeSeriesInstance& inst,
                                               const Alphabet& alphabet) {
    DiscretizedInstance out;
    out.label = inst.label();
    out.num_frames = inst.num_frames();
    out.channels.reserve(inst.num_channels());
    for (std::size_t c = 0; c < inst.num_channels(); ++c)
        out.channels.push_back(collapse_runs(discretize_channel(inst.channel(c), alphabet), c));
    return out;
}

inline std::vector<DiscretizedInstance> discretize_dataset(const Dataset& ds,
                                                           const Alphabet& alphabet) {
    std::vector<DiscretizedInstance> out;
    out.reserve(ds.size());
    for (const auto& inst : ds.instances()) out.push_back(discretize_instance(inst, alphabet));
    return out;
}

}  // namespace tspm
