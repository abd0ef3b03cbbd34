#pragma once

#include <string>
#include <vector>

#include "ingtag/phrase.hpp"

namespace ingtag {

namespace detail {
inline bool is_split_punct(char c) {
    return c == ',' || c == '(' || c == ')' || c == ';' || c == ':';
}
inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace detail

/// Rule-based tokenizer: split on whitespace, then peel the punctuation marks
/// , ( ) ; : off chunk edges into their own tokens. Interior characters are
/// never split, so numerics like "1/2" and "1.5" stay whole. Deterministic and
/// idempotent on its own space-joined output.
inline std::vector<Token> tokenize(const std::string& raw) {
    std::vector<Token> out;
    auto emit = [&](std::size_t b, std::size_t e) {
        Token t;
        t.surface = raw.substr(b, e - b);
        t.lower = lowercase(t.surface);
        t.begin = b;
        t.end = e;
        out.push_back(std::move(t));
    };

    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
        while (i < n && detail::is_space(raw[i])) ++i;
        if (i >= n) break;
        std::size_t j = i;
        while (j < n && !detail::is_space(raw[j])) ++j;

        // chunk is raw[i, j); peel leading punctuation, queue trailing.
        std::size_t l = i, r = j;
        std::vector<std::size_t> trailing;
        while (l < r && detail::is_split_punct(raw[l])) {
            emit(l, l + 1);
            ++l;
        }
        while (r > l && detail::is_split_punct(raw[r - 1])) {
            trailing.push_back(r - 1);
            --r;
        }
        if (l < r) emit(l, r);
        for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) emit(*it, *it + 1);

        i = j;
    }
    return out;
}

inline std::vector<std::string> tokenize_surfaces(const std::string& raw) {
    std::vector<std::string> out;
    for (const Token& t : tokenize(raw)) out.push_back(t.surface);
    return out;
}

}  // namespace ingtag
