#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tspm/common.hpp"

namespace tspm {

enum class ChannelGroup { POS, ROT, FINGER, OTHER };

inline std::string_view to_string(ChannelGroup g) {
    switch (g) {
        case ChannelGroup::POS: return "POS";
        case ChannelGroup::ROT: return "ROT";
        case ChannelGroup::FINGER: return "FINGER";
        case ChannelGroup::OTHER: return "OTHER";
    }
    return "OTHER";
}

inline ChannelGroup channel_group_from(std::string_view s) {
    if (s == "POS") return ChannelGroup::POS;
    if (s == "ROT") return ChannelGroup::ROT;
    if (s == "FINGER") return ChannelGroup::FINGER;
    if (s == "OTHER") return ChannelGroup::OTHER;
    throw std::invalid_argument("unknown channel group '" + std::string(s) +
                                "' (expected POS, ROT, FINGER or OTHER)");
}

struct ChannelDef {
    std::string name;
    ChannelGroup group = ChannelGroup::OTHER;
};

/// Ordered list of sensor channels. Names must be unique and non-empty.
class ChannelSchema {
public:
    ChannelSchema() = default;

    explicit ChannelSchema(std::vector<ChannelDef> channels) : channels_(std::move(channels)) {
        if (channels_.empty()) throw std::invalid_argument("schema must define at least one channel");
        std::set<std::string_view> seen;
        for (const auto& c : channels_) {
            if (c.name.empty()) throw std::invalid_argument("schema contains an empty channel name");
            if (!seen.insert(c.name).second)
                throw std::invalid_argument("duplicate channel name '" + c.name + "' in schema");
        }
    }

    std::size_t num_channels() const { return channels_.size(); }
    const ChannelDef& channel(std::size_t i) const { return channels_.at(i); }
    const std::vector<ChannelDef>& channels() const { return channels_; }

    bool operator==(const ChannelSchema& other) const {
        if (channels_.size() != other.channels_.size()) return false;
        for (std::size_t i = 0; i < channels_.size(); ++i)
            if (channels_[i].name != other.channels_[i].name ||
                channels_[i].group != other.channels_[i].group)
                return false;
        return true;
    }

private:
    std::vector<ChannelDef> channels_;
};

/// One labeled recording: a channels x frames matrix of finite reals.
/// Channel-major storage, so each channel is a contiguous span.
class TimeSeriesInstance {
public:
    TimeSeriesInstance(std::string label, std::size_t num_channels, std::size_t num_frames,
                       std::vector<double> values, std::string source_id = {})
        : label_(std::move(label)),
          source_id_(std::move(source_id)),
          num_channels_(num_channels),
          num_frames_(num_frames),
          values_(std::move(values)) {
        if (num_channels_ == 0 || num_frames_ == 0)
            throw std::invalid_argument("instance must have at least one channel and one frame");
        if (values_.size() != num_channels_ * num_frames_)
            throw std::invalid_argument("instance value count does not match channels x frames");
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("instance '" + label_ + "' contains a non-finite value");
    }

    const std::string& label() const { return label_; }
    const std::string& source_id() const { return source_id_; }
    std::size_t num_channels() const { return num_channels_; }
    std::size_t num_frames() const { return num_frames_; }

    double at(std::size_t channel, std::size_t frame) const {
        return values_[channel * num_frames_ + frame];
    }
    std::span<const double> channel(std::size_t c) const {
        return {values_.data() + c * num_frames_, num_frames_};
    }
    const std::vector<double>& values() const { return values_; }

private:
    std::string label_;
    std::string source_id_;
    std::size_t num_channels_;
    std::size_t num_frames_;
    std::vector<double> values_;
};

/// A schema plus instances. The label vocabulary is kept sorted and deduplicated;
/// that order is the canonical tie-breaking order used everywhere downstream.
class Dataset {
public:
    Dataset() = default;

    Dataset(ChannelSchema schema, std::vector<TimeSeriesInstance> instances)
        : schema_(std::move(schema)), instances_(std::move(instances)) {
        std::set<std::string> vocab;
        for (const auto& inst : instances_) {
            if (inst.num_channels() != schema_.num_channels())
                throw std::invalid_argument("instance '" + inst.source_id() +
                                            "' channel count does not match schema");
            vocab.insert(inst.label());
        }
        labels_.assign(vocab.begin(), vocab.end());
    }

    const ChannelSchema& schema() const { return schema_; }
    const std::vector<TimeSeriesInstance>& instances() const { return instances_; }
    std::size_t size() const { return instances_.size(); }

    /// Sorted, deduplicated label vocabulary.
    const std::vector<std::string>& labels() const { return labels_; }

    std::size_t label_index(std::string_view label) const {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
        if (it == labels_.end() || *it != label)
            throw std::invalid_argument("label '" + std::string(label) + "' not in vocabulary");
        return static_cast<std::size_t>(it - labels_.begin());
    }

private:
    ChannelSchema schema_;
    std::vector<TimeSeriesInstance> instances_;
    std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// On-disk format
//
// Instance file:  UTF-8 TSV, one row per frame, one column per channel, no header.
//                 Filename convention <label>.<index>.tsv carries the label.
// Schema file:    one line per channel, "name<TAB>group".
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_number(std::string_view token, const std::string& where) {
    if (token.empty()) throw std::runtime_error(where + ": empty cell");
    std::string buf(token);
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size())
        throw std::runtime_error(where + ": non-numeric cell '" + buf + "'");
    if (!std::isfinite(v)) throw std::runtime_error(where + ": non-finite cell '" + buf + "'");
    return v;
}

inline std::vector<std::string_view> split_char(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

// Strips one trailing '\r' so CRLF files parse the same as LF files.
inline std::string_view chomp(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace detail

inline ChannelSchema load_schema(const std::filesystem::path& schema_path) {
    std::ifstream in(schema_path);
    if (!in) throw std::runtime_error("cannot open schema file '" + schema_path.string() + "'");
    std::vector<ChannelDef> channels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::chomp(line);
        if (sv.empty()) continue;
        auto fields = detail::split_char(sv, '\t');
        if (fields.size() != 2)
            throw std::runtime_error(schema_path.string() + ":" + std::to_string(lineno) +
                                     ": expected 'name<TAB>group'");
        channels.push_back({std::string(fields[0]), channel_group_from(fields[1])});
    }
    if (channels.empty())
        throw std::runtime_error("schema file '" + schema_path.string() + "' defines no channels");
    return ChannelSchema(std::move(channels));
}

inline void write_schema(const std::filesystem::path& path, const ChannelSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write schema file '" + path.string() + "'");
    for (const auto& c : schema.channels()) out << c.name << '\t' << to_string(c.group) << '\n';
}

/// Parses "<label>.<index>.tsv"; returns (label, index) or throws.
inline std::pair<std::string, std::size_t> parse_instance_filename(const std::string& filename) {
    static constexpr std::string_view kExt = ".tsv";
    if (filename.size() <= kExt.size() ||
        filename.substr(filename.size() - kExt.size()) != kExt)
        throw std::runtime_error("instance file '" + filename + "' does not end in .tsv");
    std::string stem = filename.substr(0, filename.size() - kExt.size());
    std::size_t dot = stem.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == stem.size())
        throw std::runtime_error("instance file '" + filename +
                                 "' does not match <label>.<index>.tsv");
    std::string index_part = stem.substr(dot + 1);
    for (char c : index_part)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::runtime_error("instance file '" + filename +
                                     "' has a non-numeric index part '" + index_part + "'");
    return {stem.substr(0, dot), static_cast<std::size_t>(std::stoull(index_part))};
}

inline TimeSeriesInstance load_instance_tsv(const std::filesystem::path& path,
                                            const std::string& label,
                                            const ChannelSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file '" + path.string() + "'");
    const std::size_t num_channels = schema.num_channels();
    std::vector<std::vector<double>> frames;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::chomp(line);
        if (sv.empty()) continue;
        auto cells = detail::split_char(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() != num_channels)
            throw std::runtime_error(where + ": expected " + std::to_string(num_channels) +
                                     " columns, found " + std::to_string(cells.size()));
        std::vector<double> frame(num_channels);
        for (std::size_t c = 0; c < num_channels; ++c)
            frame[c] = detail::parse_number(cells[c], where);
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw std::runtime_error("instance file '" + path.string() + "' is empty");

    const std::size_t num_frames = frames.size();
    std::vector<double> values(num_channels * num_frames);
    for (std::size_t t = 0; t < num_frames; ++t)
        for (std::size_t c = 0; c < num_channels; ++c) values[c * num_frames + t] = frames[t][c];
    return TimeSeriesInstance(label, num_channels, num_frames, std::move(values),
                              path.filename().string());
}

/// Loads every <label>.<index>.tsv under root_path, in lexicographic filename
/// order so the instance order is independent of directory enumeration order.
inline Dataset load_dataset(const std::filesystem::path& root_path,
                            const std::filesystem::path& schema_path) {
    ChannelSchema schema = load_schema(schema_path);
    if (!std::filesystem::is_directory(root_path))
        throw std::runtime_error("dataset root '" + root_path.string() + "' is not a directory");

    std::vector<std::string> filenames;
    for (const auto& entry : std::filesystem::directory_iterator(root_path)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name == "schema.tsv") continue;  // reserved by write_dataset
        if (name.size() > 4 && name.substr(name.size() - 4) == ".tsv") filenames.push_back(name);
    }
    std::sort(filenames.begin(), filenames.end());
    if (filenames.empty())
        throw std::runtime_error("no instances found under '" + root_path.string() + "'");

    std::vector<TimeSeriesInstance> instances;
    instances.reserve(filenames.size());
    for (const auto& name : filenames) {
        auto [label, index] = parse_instance_filename(name);
        (void)index;
        instances.push_back(load_instance_tsv(root_path / name, label, schema));
    }
    return Dataset(std::move(schema), std::move(instances));
}

inline void write_instance_tsv(const std::filesystem::path& path, const TimeSeriesInstance& inst) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write instance file '" + path.string() + "'");
    for (std::size_t t = 0; t < inst.num_frames(); ++t) {
        for (std::size_t c = 0; c < inst.num_channels(); ++c) {
            if (c) out << '\t';
            out << detail::format_g17(inst.at(c, t));
        }
        out << '\n';
    }
}

/// Writes schema.tsv plus one <label>.<index>.tsv per instance (index counts
/// per label, in dataset order).
inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    write_schema(dir / "schema.tsv", ds.schema());
    std::map<std::string, std::size_t> counters;
    for (const auto& inst : ds.instances()) {
        std::size_t idx = counters[inst.label()]++;
        write_instance_tsv(dir / (inst.label() + "." + std::to_string(idx) + ".tsv"), inst);
    }
}

/// Stratified split: ceil(train_fraction * n_c) training instances per class,
/// remainder test. Deterministic in (dataset order, seed).
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double train_fraction,
                                                    std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");

    std::vector<std::vector<std::size_t>> by_class(ds.labels().size());
    for (std::size_t i = 0; i < ds.instances().size(); ++i)
        by_class[ds.label_index(ds.instances()[i].label())].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() < 2)
            throw std::invalid_argument("class '" + ds.labels()[c] +
                                        "' has fewer than 2 instances; cannot split");

    auto rng = detail::make_rng(seed);
    std::vector<bool> in_train(ds.instances().size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        // Fisher-Yates with the shared engine; classes processed in canonical label order.
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(detail::uniform_int(rng, 0, i));
            std::swap(idx[i], idx[j]);
        }
        const double want = train_fraction * static_cast<double>(idx.size());
        // Guard against representation error in fraction*n before taking the ceiling.
        std::size_t n_train = static_cast<std::size_t>(std::ceil(want - 1e-9));
        for (std::size_t i = 0; i < n_train; ++i) in_train[idx[i]] = true;
    }

    std::vector<TimeSeriesInstance> train, test;
    for (std::size_t i = 0; i < ds.instances().size(); ++i)
        (in_train[i] ? train : test).push_back(ds.instances()[i]);
    return {Dataset(ds.schema(), std::move(train)), Dataset(ds.schema(), std::move(test))};
}

}  // namespace tspm
