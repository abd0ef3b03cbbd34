#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ingtag/phrase.hpp"

namespace ingtag {

inline constexpr const char* kUnkPosTag = "UNK";

namespace detail {

/// Closed-class words and frequent cooking-domain words whose tag the suffix
/// rules would get wrong. Keys are lowercased surfaces.
inline const std::unordered_map<std::string, std::string>& pos_lexicon() {
    static const std::unordered_map<std::string, std::string> lex = {
        // determiners / prepositions / conjunctions / particles
        {"a", "DT"}, {"an", "DT"}, {"the", "DT"}, {"each", "DT"}, {"any", "DT"},
        {"some", "DT"}, {"all", "DT"}, {"no", "DT"},
        {"of", "IN"}, {"in", "IN"}, {"with", "IN"}, {"without", "IN"},
        {"for", "IN"}, {"on", "IN"}, {"at", "IN"}, {"from", "IN"}, {"as", "IN"},
        {"into", "IN"}, {"over", "IN"}, {"under", "IN"}, {"about", "IN"},
        {"per", "IN"}, {"if", "IN"}, {"until", "IN"}, {"plus", "CC"},
        {"to", "TO"}, {"and", "CC"}, {"or", "CC"}, {"nor", "CC"},
        {"such", "JJ"}, {"more", "JJR"}, {"most", "JJS"}, {"less", "JJR"},
        {"not", "RB"}, {"very", "RB"}, {"well", "RB"}, {"too", "RB"},
        {"so", "RB"}, {"then", "RB"}, {"just", "RB"}, {"only", "RB"},
        {"is", "VBZ"}, {"are", "VBP"}, {"be", "VB"}, {"been", "VBN"},
        {"was", "VBD"}, {"were", "VBD"},
        {"it", "PRP"}, {"you", "PRP"}, {"your", "PRP$"},
        {"may", "MD"}, {"should", "MD"}, {"will", "MD"},  // "can" stays a noun here
        {"needed", "VBN"}, {"desired", "VBN"}, {"taste", "NN"},
        // number words
        {"one", "CD"}, {"two", "CD"}, {"three", "CD"}, {"four", "CD"},
        {"five", "CD"}, {"six", "CD"}, {"seven", "CD"}, {"eight", "CD"},
        {"nine", "CD"}, {"ten", "CD"}, {"eleven", "CD"}, {"twelve", "CD"},
        {"dozen", "CD"}, {"few", "JJ"}, {"several", "JJ"}, {"couple", "NN"},
        // adjectives the default rule would call NN
        {"fresh", "JJ"}, {"dry", "JJ"}, {"hot", "JJ"}, {"cold", "JJ"},
        {"warm", "JJ"}, {"cool", "JJ"}, {"lukewarm", "JJ"}, {"boiling", "VBG"},
        {"large", "JJ"}, {"small", "JJ"}, {"medium", "JJ"}, {"big", "JJ"},
        {"little", "JJ"}, {"whole", "JJ"}, {"thick", "JJ"}, {"thin", "JJ"},
        {"fine", "JJ"}, {"coarse", "JJ"}, {"firm", "JJ"}, {"soft", "JJ"},
        {"ripe", "JJ"}, {"raw", "JJ"}, {"plain", "JJ"}, {"mild", "JJ"},
        {"spicy", "JJ"}, {"sweet", "JJ"}, {"sour", "JJ"}, {"bitter", "JJ"},
        {"lean", "JJ"}, {"light", "JJ"}, {"dark", "JJ"}, {"golden", "JJ"},
        {"red", "JJ"}, {"green", "JJ"}, {"white", "JJ"}, {"black", "JJ"},
        {"yellow", "JJ"}, {"purple", "JJ"}, {"brown", "JJ"}, {"orange", "JJ"},
        {"boneless", "JJ"}, {"skinless", "JJ"}, {"seedless", "JJ"},
        {"lowfat", "JJ"}, {"low-fat", "JJ"}, {"nonfat", "JJ"},
        {"all-purpose", "JJ"}, {"extra", "JJ"}, {"optional", "JJ"},
        {"frozen", "JJ"}, {"stale", "JJ"}, {"tender", "JJ"}, {"crisp", "JJ"},
        {"crunchy", "JJ"}, {"sharp", "JJ"}, {"heavy", "JJ"}, {"sodium-free", "JJ"},
        {"low-sodium", "JJ"}, {"sugar-free", "JJ"}, {"gluten-free", "JJ"},
        {"fat-free", "JJ"}, {"extra-virgin", "JJ"}, {"virgin", "JJ"},
        // irregular participles (no -ed)
        {"beaten", "VBN"}, {"cut", "VBN"}, {"torn", "VBN"}, {"broken", "VBN"},
        {"shaken", "VBN"}, {"ground", "VBN"}, {"shredded", "VBN"},
        // plural measures and containers (default rule has no plural handling)
        {"cups", "NNS"}, {"tablespoons", "NNS"}, {"teaspoons", "NNS"},
        {"ounces", "NNS"}, {"pounds", "NNS"}, {"grams", "NNS"},
        {"kilograms", "NNS"}, {"liters", "NNS"}, {"litres", "NNS"},
        {"milliliters", "NNS"}, {"quarts", "NNS"}, {"pints", "NNS"},
        {"gallons", "NNS"}, {"slices", "NNS"}, {"pieces", "NNS"},
        {"cloves", "NNS"}, {"cans", "NNS"}, {"packages", "NNS"},
        {"sticks", "NNS"}, {"sprigs", "NNS"}, {"pinches", "NNS"},
        {"dashes", "NNS"}, {"bunches", "NNS"}, {"heads", "NNS"},
        {"stalks", "NNS"}, {"ears", "NNS"}, {"fillets", "NNS"},
        {"strips", "NNS"}, {"cubes", "NNS"}, {"halves", "NNS"},
        {"wedges", "NNS"}, {"leaves", "NNS"}, {"containers", "NNS"},
        {"jars", "NNS"}, {"bottles", "NNS"}, {"boxes", "NNS"},
        {"bags", "NNS"}, {"envelopes", "NNS"}, {"packets", "NNS"},
        {"drops", "NNS"}, {"lbs", "NNS"}, {"tbsps", "NNS"}, {"tsps", "NNS"},
        {"eggs", "NNS"}, {"onions", "NNS"}, {"carrots", "NNS"},
        {"potatoes", "NNS"}, {"tomatoes", "NNS"}, {"mushrooms", "NNS"},
        {"peppers", "NNS"}, {"apples", "NNS"}, {"bananas", "NNS"},
        {"berries", "NNS"}, {"nuts", "NNS"}, {"almonds", "NNS"},
        {"walnuts", "NNS"}, {"pecans", "NNS"}, {"raisins", "NNS"},
        {"breadcrumbs", "NNS"}, {"oats", "NNS"}, {"beans", "NNS"},
        {"peas", "NNS"}, {"lentils", "NNS"}, {"noodles", "NNS"},
        {"scallions", "NNS"}, {"shallots", "NNS"}, {"chives", "NNS"},
        {"herbs", "NNS"}, {"spices", "NNS"}, {"seeds", "NNS"},
        {"flakes", "NNS"}, {"chips", "NNS"}, {"chunks", "NNS"},
        {"pods", "NNS"}, {"kernels", "NNS"}, {"florets", "NNS"},
        // frequent singular measures (NN is the default, listed for clarity
        // and so suffix rules never claim them)
        {"cup", "NN"}, {"tablespoon", "NN"}, {"teaspoon", "NN"},
        {"ounce", "NN"}, {"pound", "NN"}, {"gram", "NN"}, {"kilogram", "NN"},
        {"liter", "NN"}, {"litre", "NN"}, {"milliliter", "NN"},
        {"quart", "NN"}, {"pint", "NN"}, {"gallon", "NN"}, {"slice", "NN"},
        {"piece", "NN"}, {"clove", "NN"}, {"can", "NN"}, {"package", "NN"},
        {"stick", "NN"}, {"sprig", "NN"}, {"pinch", "NN"}, {"dash", "NN"},
        {"bunch", "NN"}, {"head", "NN"}, {"stalk", "NN"}, {"fillet", "NN"},
        {"strip", "NN"}, {"cube", "NN"}, {"half", "NN"}, {"wedge", "NN"},
        {"leaf", "NN"}, {"container", "NN"}, {"jar", "NN"}, {"bottle", "NN"},
        {"box", "NN"}, {"bag", "NN"}, {"envelope", "NN"}, {"packet", "NN"},
        {"drop", "NN"}, {"lb", "NN"}, {"oz", "NN"}, {"tbsp", "NN"},
        {"tsp", "NN"}, {"g", "NN"}, {"kg", "NN"}, {"ml", "NN"}, {"l", "NN"},
        {"pkg", "NN"}, {"qt", "NN"}, {"pt", "NN"}, {"gal", "NN"},
    };
    return lex;
}

inline bool is_numeric_token(const std::string& s) {
    bool digit = false;
    for (char c : s) {
        if (c >= '0' && c <= '9') {
            digit = true;
        } else if (c != '/' && c != '.' && c != '-' && c != ',') {
            return false;
        }
    }
    return digit;
}

inline bool is_punct_token(const std::string& s) {
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) return false;
    }
    return !s.empty();
}

inline bool ends_with(const std::string& s, const char* suf) {
    std::string_view v(suf);
    return s.size() >= v.size() && s.compare(s.size() - v.size(), v.size(), v) == 0;
}

}  // namespace detail

/// Tag one token. Precedence: numerals, punctuation, lexicon, suffix rules,
/// default NN. Total and deterministic.
inline std::string pos_tag_one(const std::string& lower_surface) {
    const std::string& w = lower_surface;
    if (w.empty()) return kUnkPosTag;
    if (detail::is_numeric_token(w)) return "CD";
    if (detail::is_punct_token(w)) {
        if (w == ",") return ",";
        if (w == "(") return "(";
        if (w == ")") return ")";
        if (w == ".") return ".";
        return ":";  // ; : and the rest of the symbol bucket
    }
    const auto& lex = detail::pos_lexicon();
    if (auto it = lex.find(w); it != lex.end()) return it->second;
    if (detail::ends_with(w, "ly")) return "RB";
    if (detail::ends_with(w, "ed")) return "VBN";
    if (detail::ends_with(w, "ing")) return "VBG";
    return "NN";
}

inline std::vector<std::string> pos_tag(const std::vector<Token>& tokens) {
    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    for (const Token& t : tokens) tags.push_back(pos_tag_one(t.lower));
    return tags;
}

/// Fill Token::pos in place for tokens that do not already carry a tag.
inline void apply_pos_tags(std::vector<Token>& tokens) {
    for (Token& t : tokens) {
        if (t.pos.empty()) t.pos = pos_tag_one(t.lower);
    }
}

}  // namespace ingtag
