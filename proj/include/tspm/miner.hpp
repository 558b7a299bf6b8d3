#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tspm/pattern.hpp"

namespace tspm {

struct MiningConfig {
    std::size_t alphabet_size = 3;
    std::size_t window = 2;
    std::size_t min_support = 20;
    std::size_t max_pattern_length = 2;
    std::size_t max_patterns = 100;
    bool use_derivative = false;
};

inline void validate(const MiningConfig& cfg) {
    if (cfg.alphabet_size != 3 && cfg.alphabet_size != 5)
        throw std::invalid_argument("alphabet_size must be 3 or 5");
    if (cfg.min_support < 1) throw std::invalid_argument("min_support must be >= 1");
    if (cfg.max_pattern_length < 1)
        throw std::invalid_argument("max_pattern_length must be >= 1");
    if (cfg.max_patterns < 1) throw std::invalid_argument("max_patterns must be >= 1");
}

/// Per-instance matching index: runs grouped by (channel, symbol), kept in
/// frame order so both starts and ends are increasing within a group.
class MatchIndex {
public:
    explicit MatchIndex(const DiscretizedInstance& d)
        : label_(d.label), num_channels_(d.channels.size()) {
        std::size_t max_symbol = 0;
        for (const auto& runs : d.channels)
            for (const auto& r : runs) max_symbol = std::max(max_symbol, r.symbol);
        symbols_ = max_symbol + 1;
        runs_.resize(num_channels_ * symbols_);
        for (const auto& runs : d.channels)
            for (const auto& r : runs)
                runs_[r.channel * symbols_ + r.symbol].push_back({r.start_frame, r.end_frame});
    }

    const std::string& label() const { return label_; }
    std::size_t num_channels() const { return num_channels_; }

    /// Runs of one symbol on one channel. A symbol that never occurs yields an
    /// empty span; a channel outside the schema is an error.
    std::span<const std::pair<std::size_t, std::size_t>> runs_for(std::size_t channel,
                                                                  std::size_t symbol) const {
        if (channel >= num_channels_)
            throw std::invalid_argument("pattern names channel " + std::to_string(channel) +
                                        " but the instance has " + std::to_string(num_channels_) +
                                        " channels");
        if (symbol >= symbols_) return {};
        return runs_[channel * symbols_ + symbol];
    }

private:
    std::string label_;
    std::size_t num_channels_;
    std::size_t symbols_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> runs_;
};

/// True iff some assignment of states to runs satisfies every consecutive
/// relation. Constraints form a chain, so forward propagation of the feasible
/// run set per state is exact: state i+1's feasible runs are those with a
/// feasible predecessor, and the pattern matches iff the last set is
/// non-empty.
inline bool match_pattern(const Pattern& p, const MatchIndex& idx, std::size_t window) {
    validate(p);
    auto first = idx.runs_for(p.states[0].channel, p.states[0].symbol);
    std::vector<std::pair<std::size_t, std::size_t>> reach(first.begin(), first.end());
    for (std::size_t i = 1; i < p.states.size() && !reach.empty(); ++i) {
        auto cand = idx.runs_for(p.states[i].channel, p.states[i].symbol);
        std::vector<std::pair<std::size_t, std::size_t>> next;
        if (p.relations[i - 1] == Relation::BEFORE) {
            // need a feasible run ending in [start - window, start - 1];
            // reach ends are ascending, so one binary search decides.
            for (const auto& r : cand) {
                if (r.first == 0) continue;
                const std::size_t lo = r.first > window ? r.first - window : 0;
                auto it = std::lower_bound(
                    reach.begin(), reach.end(), lo,
                    [](const auto& run, std::size_t v) { return run.second < v; });
                if (it != reach.end() && it->second <= r.first - 1) next.push_back(r);
            }
        } else {
            // overlap: need start' <= end(r) and end' >= start(r); among runs
            // with start' <= end(r) the largest end' is the last one.
            for (const auto& r : cand) {
                auto it = std::upper_bound(
                    reach.begin(), reach.end(), r.second,
                    [](std::size_t v, const auto& run) { return v < run.first; });
                if (it != reach.begin() && std::prev(it)->second >= r.first) next.push_back(r);
            }
        }
        reach = std::move(next);
    }
    return !reach.empty();
}

inline bool match_pattern(const Pattern& p, const DiscretizedInstance& d, std::size_t window) {
    return match_pattern(p, MatchIndex(d), window);
}

/// Binary per-instance support: each class maps to the number of its
/// instances the pattern matches at least once.
inline std::map<std::string, std::size_t> support_counts(
    const Pattern& p, const std::vector<DiscretizedInstance>& instances, std::size_t window) {
    std::map<std::string, std::size_t> counts;
    for (const auto& d : instances) {
        auto& slot = counts[d.label];
        if (match_pattern(p, d, window)) ++slot;
    }
    return counts;
}

/// All states that occur in at least one instance, in canonical text order.
inline std::vector<State> state_universe(const std::vector<DiscretizedInstance>& instances,
                                         const Alphabet& alphabet) {
    std::set<std::pair<std::size_t, std::size_t>> seen;  // (symbol, channel)
    for (const auto& d : instances)
        for (const auto& runs : d.channels)
            for (const auto& r : runs) seen.insert({r.symbol, r.channel});
    std::vector<State> out;
    out.reserve(seen.size());
    for (const auto& [symbol, channel] : seen) out.push_back({symbol, channel});
    std::sort(out.begin(), out.end(), [&](const State& a, const State& b) {
        return state_text(a, alphabet) < state_text(b, alphabet);
    });
    return out;
}

/// Extends every length-k frequent pattern by one (relation, state) suffix.
/// k = 0 is the seeding case: one single-state pattern per universe state.
/// Output is deduplicated and sorted by canonical text.
inline std::vector<Pattern> generate_candidates(const std::vector<Pattern>& frequent_k,
                                                const std::vector<State>& universe,
                                                const Alphabet& alphabet, std::size_t k) {
    for (const auto& p : frequent_k)
        if (p.length() != k)
            throw std::invalid_argument("generate_candidates: pattern of length " +
                                        std::to_string(p.length()) + " in a length-" +
                                        std::to_string(k) + " frontier");
    std::vector<std::pair<std::string, Pattern>> keyed;
    if (k == 0) {
        for (const State& s : universe) {
            Pattern p{{s}, {}};
            keyed.emplace_back(canonical_text(p, alphabet), std::move(p));
        }
    } else {
        keyed.reserve(frequent_k.size() * universe.size() * 2);
        for (const Pattern& p : frequent_k) {
            for (const State& s : universe) {
                for (Relation rel : {Relation::BEFORE, Relation::OVERLAP}) {
                    Pattern q = p;
                    q.states.push_back(s);
                    q.relations.push_back(rel);
                    keyed.emplace_back(canonical_text(q, alphabet), std::move(q));
                }
            }
        }
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    std::vector<Pattern> out;
    out.reserve(keyed.size());
    for (auto& [text, p] : keyed) out.push_back(std::move(p));
    return out;
}

struct LevelStats {
    std::size_t k = 0;
    std::size_t candidates = 0;
    std::size_t frequent = 0;
    double millis = 0.0;
};

namespace detail {

struct ClassTable {
    std::vector<std::string> labels;        // sorted vocabulary
    std::vector<std::size_t> class_of;      // per instance
    std::vector<std::size_t> class_totals;  // per class

    explicit ClassTable(const std::vector<DiscretizedInstance>& instances) {
        std::set<std::string> vocab;
        for (const auto& d : instances) vocab.insert(d.label);
        labels.assign(vocab.begin(), vocab.end());
        class_totals.assign(labels.size(), 0);
        class_of.reserve(instances.size());
        for (const auto& d : instances) {
            auto it = std::lower_bound(labels.begin(), labels.end(), d.label);
            auto c = static_cast<std::size_t>(it - labels.begin());
            class_of.push_back(c);
            ++class_totals[c];
        }
    }
};

// 2xC table score; 0 when either row marginal vanishes, cells with zero
// expectation are skipped.
inline double chi_square_table(const std::vector<std::size_t>& totals,
                               const std::vector<std::size_t>& present) {
    const double n = static_cast<double>(
        std::accumulate(totals.begin(), totals.end(), std::size_t{0}));
    double row1 = 0.0;
    for (std::size_t c = 0; c < present.size(); ++c) row1 += static_cast<double>(present[c]);
    const double row0 = n - row1;
    if (row1 == 0.0 || row0 == 0.0) return 0.0;
    double chi = 0.0;
    for (std::size_t c = 0; c < totals.size(); ++c) {
        const double nc = static_cast<double>(totals[c]);
        const double m = static_cast<double>(present[c]);
        const double e1 = row1 * nc / n;
        const double e0 = row0 * nc / n;
        if (e1 > 0.0) chi += (m - e1) * (m - e1) / e1;
        if (e0 > 0.0) chi += (nc - m - e0) * (nc - m - e0) / e0;
    }
    return chi;
}

}  // namespace detail

/// Levelwise Apriori over the pattern language. A pattern survives a level if
/// its best per-class support reaches min_support; the universe for extension
/// is the frequent single states. Matching for an extended pattern is
/// restricted to instances that matched its prefix (matching is monotone in
/// the prefix). Per-level sizes and timings go to stderr.
inline std::vector<Pattern> mine_frequent(const std::vector<DiscretizedInstance>& train,
                                          const MiningConfig& cfg,
                                          std::vector<LevelStats>* stats_out = nullptr) {
    validate(cfg);
    if (train.empty()) throw std::invalid_argument("mine_frequent: empty training set");
    const Alphabet alphabet(cfg.alphabet_size);
    const detail::ClassTable classes(train);

    std::vector<MatchIndex> idx;
    idx.reserve(train.size());
    for (const auto& d : train) idx.push_back(MatchIndex(d));

    struct Node {
        Pattern pattern;
        std::vector<std::uint32_t> tids;  // matched instance indices, ascending
    };

    std::vector<Pattern> result;
    std::vector<Node> frontier;
    std::unordered_map<std::string, std::size_t> frontier_by_text;
    std::vector<State> universe;

    for (std::size_t k = 1; k <= cfg.max_pattern_length; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Pattern> candidates;
        if (k == 1) {
            candidates = generate_candidates({}, state_universe(train, alphabet), alphabet, 0);
        } else {
            std::vector<Pattern> prev;
            prev.reserve(frontier.size());
            for (const auto& node : frontier) prev.push_back(node.pattern);
            candidates = generate_candidates(prev, universe, alphabet, k - 1);
        }

        std::vector<Node> next;
        std::unordered_map<std::string, std::size_t> next_by_text;
        for (auto& cand : candidates) {
            // restrict matching to the prefix's tid list
            const std::vector<std::uint32_t>* parent_tids = nullptr;
            if (k > 1) {
                Pattern prefix = cand;
                prefix.states.pop_back();
                prefix.relations.pop_back();
                auto it = frontier_by_text.find(canonical_text(prefix, alphabet));
                if (it == frontier_by_text.end()) continue;  // unreachable by construction
                parent_tids = &frontier[it->second].tids;
            }
            Node node;
            std::vector<std::size_t> present(classes.labels.size(), 0);
            auto consider = [&](std::uint32_t tid) {
                if (match_pattern(cand, idx[tid], cfg.window)) {
                    node.tids.push_back(tid);
                    ++present[classes.class_of[tid]];
                }
            };
            if (parent_tids) {
                for (std::uint32_t tid : *parent_tids) consider(tid);
            } else {
                for (std::uint32_t tid = 0; tid < train.size(); ++tid) consider(tid);
            }
            const std::size_t best = *std::max_element(present.begin(), present.end());
            if (best >= cfg.min_support) {
                node.pattern = std::move(cand);
                next_by_text.emplace(canonical_text(node.pattern, alphabet), next.size());
                next.push_back(std::move(node));
            }
        }

        if (k == 1) {
            universe.clear();
            for (const auto& node : next) universe.push_back(node.pattern.states[0]);
        }
        for (const auto& node : next) result.push_back(node.pattern);

        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (stats_out) stats_out->push_back({k, candidates.size(), next.size(), ms});
        std::fprintf(stderr, "[mine] k=%zu candidates=%zu frequent=%zu ms=%.1f\n", k,
                     candidates.size(), next.size(), ms);

        frontier = std::move(next);
        frontier_by_text = std::move(next_by_text);
        if (frontier.empty()) break;
    }
    return result;
}

inline double chi_square_score(const Pattern& p, const std::vector<DiscretizedInstance>& train,
                               std::size_t window) {
    const detail::ClassTable classes(train);
    if (classes.labels.size() < 2)
        throw std::invalid_argument("chi_square_score requires at least 2 classes");
    std::vector<std::size_t> present(classes.labels.size(), 0);
    for (std::size_t i = 0; i < train.size(); ++i)
        if (match_pattern(p, train[i], window)) ++present[classes.class_of[i]];
    return detail::chi_square_table(classes.class_totals, present);
}

struct ScoredPattern {
    Pattern pattern;
    std::string text;  // canonical form
    double score = 0.0;
};

struct RankedPatternSet {
    std::vector<ScoredPattern> patterns;
    MiningConfig config;
};

/// Scores every mined pattern and keeps the max_patterns best under the order
/// (score desc, length asc, canonical text asc).
inline RankedPatternSet select_top(const std::vector<Pattern>& mined,
                                   const std::vector<DiscretizedInstance>& train,
                                   const MiningConfig& cfg) {
    validate(cfg);
    const Alphabet alphabet(cfg.alphabet_size);
    const detail::ClassTable classes(train);
    if (classes.labels.size() < 2)
        throw std::invalid_argument("select_top requires at least 2 classes");

    std::vector<MatchIndex> idx;
    idx.reserve(train.size());
    for (const auto& d : train) idx.push_back(MatchIndex(d));

    RankedPatternSet ranked;
    ranked.config = cfg;
    ranked.patterns.reserve(mined.size());
    for (const auto& p : mined) {
        std::vector<std::size_t> present(classes.labels.size(), 0);
        for (std::size_t i = 0; i < idx.size(); ++i)
            if (match_pattern(p, idx[i], cfg.window)) ++present[classes.class_of[i]];
        ranked.patterns.push_back(
            {p, canonical_text(p, alphabet),
             detail::chi_square_table(classes.class_totals, present)});
    }
    std::sort(ranked.patterns.begin(), ranked.patterns.end(),
              [](const ScoredPattern& a, const ScoredPattern& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.pattern.length() != b.pattern.length())
                      return a.pattern.length() < b.pattern.length();
                  return a.text < b.text;
              });
    if (ranked.patterns.size() > cfg.max_patterns) ranked.patterns.resize(cfg.max_patterns);
    return ranked;
}

struct BinaryFeatures {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> entries;  // row-major, values 0/1
    std::vector<std::string> row_labels;

    std::uint8_t at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
};

inline BinaryFeatures binarize(const std::vector<DiscretizedInstance>& instances,
                               const RankedPatternSet& ranked) {
    BinaryFeatures out;
    out.rows = instances.size();
    out.cols = ranked.patterns.size();
    out.entries.assign(out.rows * out.cols, 0);
    out.row_labels.reserve(out.rows);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        out.row_labels.push_back(instances[i].label);
        const MatchIndex idx(instances[i]);
        for (std::size_t j = 0; j < ranked.patterns.size(); ++j)
            if (match_pattern(ranked.patterns[j].pattern, idx, ranked.config.window))
                out.entries[i * out.cols + j] = 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pattern set file: '#' header with the mining config (first line), optional
// further '#' audit lines, then one `<pattern><TAB><score>` line per pattern
// with 6-decimal scores.
// ---------------------------------------------------------------------------

inline std::string mining_config_line(const MiningConfig& cfg) {
    std::string s = "# alphabet_size=" + std::to_string(cfg.alphabet_size);
    s += " window=" + std::to_string(cfg.window);
    s += " min_support=" + std::to_string(cfg.min_support);
    s += " max_pattern_length=" + std::to_string(cfg.max_pattern_length);
    s += " max_patterns=" + std::to_string(cfg.max_patterns);
    s += " use_derivative=" + std::string(cfg.use_derivative ? "1" : "0");
    return s;
}

inline void write_pattern_file(const std::filesystem::path& path, const RankedPatternSet& ranked,
                               const std::vector<std::string>& audit_lines = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pattern file '" + path.string() + "'");
    out << mining_config_line(ranked.config) << '\n';
    for (const auto& line : audit_lines) out << "# " << line << '\n';
    for (const auto& sp : ranked.patterns)
        out << sp.text << '\t' << detail::format_fixed(sp.score, 6) << '\n';
}

inline RankedPatternSet read_pattern_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pattern file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("pattern file '" + path.string() + "' is empty");

    RankedPatternSet ranked;
    {
        std::string_view sv = detail::chomp(line);
        if (sv.substr(0, 2) != "# ")
            throw std::runtime_error(path.string() + ":1: expected a '# key=value ...' header");
        MiningConfig cfg;
        bool seen_alpha = false;
        for (auto token : detail::split_char(sv.substr(2), ' ')) {
            auto eq = token.find('=');
            if (eq == std::string_view::npos) continue;
            std::string key(token.substr(0, eq));
            std::string val(token.substr(eq + 1));
            const auto as_count = [&] { return static_cast<std::size_t>(std::stoull(val)); };
            if (key == "alphabet_size") {
                cfg.alphabet_size = as_count();
                seen_alpha = true;
            } else if (key == "window") {
                cfg.window = as_count();
            } else if (key == "min_support") {
                cfg.min_support = as_count();
            } else if (key == "max_pattern_length") {
                cfg.max_pattern_length = as_count();
            } else if (key == "max_patterns") {
                cfg.max_patterns = as_count();
            } else if (key == "use_derivative") {
                cfg.use_derivative = val == "1" || val == "true";
            } else {
                throw std::runtime_error(path.string() + ":1: unknown header key '" + key + "'");
            }
        }
        if (!seen_alpha)
            throw std::runtime_error(path.string() + ":1: header lacks alphabet_size");
        validate(cfg);
        ranked.config = cfg;
    }

    const Alphabet alphabet(ranked.config.alphabet_size);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::chomp(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto tab = sv.find('\t');
        if (tab == std::string_view::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected '<pattern><TAB><score>'");
        ScoredPattern sp;
        sp.text = std::string(sv.substr(0, tab));
        sp.pattern = parse_pattern(sp.text, alphabet);
        sp.score = detail::parse_number(sv.substr(tab + 1),
                                        path.string() + ":" + std::to_string(lineno));
        ranked.patterns.push_back(std::move(sp));
    }
    return ranked;
}

}  // namespace tspm
