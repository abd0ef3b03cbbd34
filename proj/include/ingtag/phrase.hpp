#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ingtag/label.hpp"

namespace ingtag {

/// One token of an ingredient phrase. `span` indexes into the raw phrase text.
struct Token {
    std::string surface;
    std::string lower;        // surface lowercased
    std::string pos;          // Penn-Treebank tag, or empty until tagged
    std::size_t begin = 0;    // character offsets, [begin, end)
    std::size_t end = 0;
};

/// An ingredient phrase: the unit of training and inference.
struct Phrase {
    std::string raw;
    std::vector<Token> tokens;
    std::optional<std::vector<Label>> gold;  // same length as tokens when present

    std::size_t size() const { return tokens.size(); }
    bool labeled() const { return gold.has_value(); }
};

inline std::string lowercase(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

}  // namespace ingtag
