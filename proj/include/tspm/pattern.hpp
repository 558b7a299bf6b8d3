#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tspm/discretize.hpp"

namespace tspm {

/// One pattern element: a symbol observed on a channel.
struct State {
    std::size_t symbol = 0;  // alphabet symbol index
    std::size_t channel = 0;

    bool operator==(const State&) const = default;
};

enum class Relation { BEFORE, OVERLAP };

/// k states joined by k-1 relations, e.g. "H:1-b;L:2" = H on channel 1
/// strictly before L on channel 2.
struct Pattern {
    std::vector<State> states;
    std::vector<Relation> relations;

    std::size_t length() const { return states.size(); }
    bool operator==(const Pattern&) const = default;
};

inline void validate(const Pattern& p) {
    if (p.states.empty()) throw std::invalid_argument("pattern must contain at least one state");
    if (p.relations.size() + 1 != p.states.size())
        throw std::invalid_argument("pattern must have exactly one relation between states");
}

inline std::string state_text(const State& s, const Alphabet& alphabet) {
    return alphabet.symbol(s.symbol) + ":" + std::to_string(s.channel);
}

inline std::string canonical_text(const Pattern& p, const Alphabet& alphabet) {
    validate(p);
    std::string out = state_text(p.states[0], alphabet);
    for (std::size_t i = 1; i < p.states.size(); ++i) {
        out += p.relations[i - 1] == Relation::BEFORE ? "-b;" : "-o;";
        out += state_text(p.states[i], alphabet);
    }
    return out;
}

/// Inverse of canonical_text. Accepts exactly the canonical grammar
/// SYM:ch(-b;SYM:ch|-o;SYM:ch)*.
inline Pattern parse_pattern(std::string_view text, const Alphabet& alphabet) {
    Pattern p;
    std::size_t pos = 0;
    const auto fail = [&](const std::string& why) {
        throw std::invalid_argument("cannot parse pattern '" + std::string(text) + "': " + why);
    };
    while (true) {
        std::size_t colon = text.find(':', pos);
        if (colon == std::string_view::npos || colon == pos) fail("expected SYMBOL:channel");
        State s;
        const auto sym = text.substr(pos, colon - pos);
        try {
            s.symbol = alphabet.symbol_index(sym);
        } catch (const std::invalid_argument&) {
            fail("unknown symbol '" + std::string(sym) + "'");
        }
        std::size_t dig = colon + 1;
        std::size_t channel = 0;
        bool any = false;
        while (dig < text.size() && text[dig] >= '0' && text[dig] <= '9') {
            channel = channel * 10 + static_cast<std::size_t>(text[dig] - '0');
            ++dig;
            any = true;
        }
        if (!any) fail("expected a channel number");
        s.channel = channel;
        p.states.push_back(s);
        if (dig == text.size()) break;
        if (dig + 3 > text.size() || text[dig] != '-' || text[dig + 2] != ';' ||
            (text[dig + 1] != 'b' && text[dig + 1] != 'o'))
            fail("expected '-b;' or '-o;' after a state");
        p.relations.push_back(text[dig + 1] == 'b' ? Relation::BEFORE : Relation::OVERLAP);
        pos = dig + 3;
    }
    validate(p);
    return p;
}

}  // namespace tspm
