#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tspm/common.hpp"
#include "tspm/core.hpp"

namespace tspm {

enum class PlantLevel { Low, Mid, High };

inline double plant_value(PlantLevel level) {
    // Levels sit strictly inside the 3-symbol bins even after +0.05 noise.
    switch (level) {
        case PlantLevel::Low: return 0.15;
        case PlantLevel::Mid: return 0.5;
        case PlantLevel::High: return 0.85;
    }
    return 0.5;
}

inline std::string_view to_string(PlantLevel level) {
    switch (level) {
        case PlantLevel::Low: return "low";
        case PlantLevel::Mid: return "mid";
        case PlantLevel::High: return "high";
    }
    return "mid";
}

inline PlantLevel plant_level_from(std::string_view s) {
    if (s == "low") return PlantLevel::Low;
    if (s == "mid") return PlantLevel::Mid;
    if (s == "high") return PlantLevel::High;
    throw std::invalid_argument("unknown plant level '" + std::string(s) +
                                "' (expected low, mid or high)");
}

/// One planted plateau: a level held over a random window of a channel.
/// start is drawn from [start_lo, start_hi], duration from [dur_lo, dur_hi].
struct PlantSpec {
    std::size_t channel = 0;
    PlantLevel level = PlantLevel::High;
    std::size_t start_lo = 0, start_hi = 0;
    std::size_t dur_lo = 1, dur_hi = 1;
};

struct SyntheticSpec {
    std::size_t num_classes = 0;
    std::size_t instances_per_class = 0;
    std::size_t num_channels = 0;
    std::size_t num_frames = 0;
    std::vector<std::vector<PlantSpec>> planted_patterns;  // one list per class
    double noise_amplitude = 0.05;
    std::uint64_t seed = 0;
};

namespace detail {

inline bool plant_defs_equal(const PlantSpec& a, const PlantSpec& b) {
    return a.channel == b.channel && a.level == b.level && a.start_lo == b.start_lo &&
           a.start_hi == b.start_hi && a.dur_lo == b.dur_lo && a.dur_hi == b.dur_hi;
}

inline std::string plant_sort_key(const PlantSpec& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu|%d|%zu|%zu|%zu|%zu", p.channel,
                  static_cast<int>(p.level), p.start_lo, p.start_hi, p.dur_lo, p.dur_hi);
    return buf;
}

}  // namespace detail

/// Throws std::invalid_argument on any violated SyntheticSpec invariant.
inline void validate_synthetic_spec(const SyntheticSpec& spec) {
    if (spec.num_classes == 0) throw std::invalid_argument("num_classes must be >= 1");
    if (spec.instances_per_class == 0)
        throw std::invalid_argument("instances_per_class must be >= 1");
    if (spec.num_channels == 0) throw std::invalid_argument("num_channels must be >= 1");
    if (spec.num_frames == 0) throw std::invalid_argument("num_frames must be >= 1");
    if (spec.noise_amplitude < 0.0)
        throw std::invalid_argument("noise_amplitude must be >= 0");
    if (spec.planted_patterns.size() != spec.num_classes)
        throw std::invalid_argument("planted_patterns must list exactly one pattern set per class");

    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (const auto& p : spec.planted_patterns[c]) {
            if (p.channel >= spec.num_channels)
                throw std::invalid_argument("plant for class " + std::to_string(c) +
                                            " names channel " + std::to_string(p.channel) +
                                            " outside the schema");
            if (p.start_lo > p.start_hi || p.dur_lo > p.dur_hi || p.dur_lo == 0)
                throw std::invalid_argument("plant for class " + std::to_string(c) +
                                            " has an empty start or duration range");
            if (p.start_hi + p.dur_hi > spec.num_frames)
                throw std::invalid_argument("plant for class " + std::to_string(c) +
                                            " can exceed num_frames");
        }
        // Relative order of a class's plants must be the same in every instance:
        // no pair may be able to occur in both strict orders across draws.
        const auto& plants = spec.planted_patterns[c];
        for (std::size_t i = 0; i < plants.size(); ++i) {
            for (std::size_t j = i + 1; j < plants.size(); ++j) {
                bool i_can_precede = plants[i].start_lo + plants[i].dur_lo <= plants[j].start_hi;
                bool j_can_precede = plants[j].start_lo + plants[j].dur_lo <= plants[i].start_hi;
                if (i_can_precede && j_can_precede)
                    throw std::invalid_argument(
                        "plants " + std::to_string(i) + " and " + std::to_string(j) +
                        " of class " + std::to_string(c) +
                        " can occur in either temporal order; tighten their ranges");
            }
        }
    }

    // Class pattern sets must be pairwise distinct (as sets, order ignored).
    std::vector<std::vector<std::string>> keysets(spec.num_classes);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (const auto& p : spec.planted_patterns[c]) keysets[c].push_back(detail::plant_sort_key(p));
        std::sort(keysets[c].begin(), keysets[c].end());
    }
    for (std::size_t a = 0; a < spec.num_classes; ++a)
        for (std::size_t b = a + 1; b < spec.num_classes; ++b)
            if (keysets[a] == keysets[b])
                throw std::invalid_argument("classes " + std::to_string(a) + " and " +
                                            std::to_string(b) +
                                            " have identical planted pattern sets");
}

inline std::string synthetic_label(std::size_t class_index, std::size_t num_classes) {
    std::size_t width = 1;
    for (std::size_t n = num_classes > 0 ? num_classes - 1 : 0; n >= 10; n /= 10) ++width;
    std::string digits = std::to_string(class_index);
    return "class" + std::string(width - digits.size(), '0') + digits;
}

/// Pure function of spec: plants plateaus (later plants overwrite earlier ones
/// on overlapping cells), then adds U[0, noise_amplitude] noise everywhere.
/// Each instance draws from its own seed stream, so output does not depend on
/// generation order.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    validate_synthetic_spec(spec);

    std::vector<ChannelDef> channels;
    for (std::size_t c = 0; c < spec.num_channels; ++c)
        channels.push_back({"ch" + std::to_string(c), ChannelGroup::OTHER});
    ChannelSchema schema{std::move(channels)};

    std::vector<TimeSeriesInstance> instances;
    instances.reserve(spec.num_classes * spec.instances_per_class);
    for (std::size_t cls = 0; cls < spec.num_classes; ++cls) {
        const std::string label = synthetic_label(cls, spec.num_classes);
        for (std::size_t k = 0; k < spec.instances_per_class; ++k) {
            auto rng = detail::make_rng(detail::mix64(detail::mix64(spec.seed, cls), k));
            std::vector<double> values(spec.num_channels * spec.num_frames, 0.0);
            for (const auto& p : spec.planted_patterns[cls]) {
                std::size_t start =
                    static_cast<std::size_t>(detail::uniform_int(rng, p.start_lo, p.start_hi));
                std::size_t dur =
                    static_cast<std::size_t>(detail::uniform_int(rng, p.dur_lo, p.dur_hi));
                for (std::size_t t = start; t < start + dur; ++t)
                    values[p.channel * spec.num_frames + t] = plant_value(p.level);
            }
            if (spec.noise_amplitude > 0.0)
                for (double& v : values) v += detail::uniform01(rng) * spec.noise_amplitude;
            instances.emplace_back(label, spec.num_channels, spec.num_frames, std::move(values),
                                   "synthetic:" + label + "." + std::to_string(k));
        }
    }
    return Dataset(std::move(schema), std::move(instances));
}

}  // namespace tspm
