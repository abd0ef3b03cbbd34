#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace ingtag {

/// The eight attribute classes assigned to ingredient-phrase tokens.
enum class Label : std::uint8_t {
    Name = 0,
    State,
    Unit,
    Quantity,
    Size,
    Temperature,
    DryFresh,
    Others,
};

constexpr std::size_t kNumLabels = 8;

constexpr std::array<Label, kNumLabels> all_labels() {
    return {Label::Name,        Label::State,    Label::Unit,
            Label::Quantity,    Label::Size,     Label::Temperature,
            Label::DryFresh,    Label::Others};
}

inline const char* label_name(Label l) {
    switch (l) {
        case Label::Name: return "NAME";
        case Label::State: return "STATE";
        case Label::Unit: return "UNIT";
        case Label::Quantity: return "QUANTITY";
        case Label::Size: return "SIZE";
        case Label::Temperature: return "TEMPERATURE";
        case Label::DryFresh: return "DRY_FRESH";
        case Label::Others: return "OTHERS";
    }
    return "?";
}

/// Human-readable name used in metric tables.
inline const char* label_display_name(Label l) {
    switch (l) {
        case Label::Name: return "Name";
        case Label::State: return "State";
        case Label::Unit: return "Unit";
        case Label::Quantity: return "Quantity";
        case Label::Size: return "Size";
        case Label::Temperature: return "Temperature";
        case Label::DryFresh: return "Dry/Fresh";
        case Label::Others: return "Others";
    }
    return "?";
}

/// Key used for the per-attribute map in JSON output ("Others" is excluded there).
inline const char* label_json_key(Label l) {
    switch (l) {
        case Label::Name: return "name";
        case Label::State: return "state";
        case Label::Unit: return "unit";
        case Label::Quantity: return "quantity";
        case Label::Size: return "size";
        case Label::Temperature: return "temperature";
        case Label::DryFresh: return "dry_fresh";
        case Label::Others: return "others";
    }
    return "?";
}

/// Maps dataset tag strings onto the canonical label set. Matching is
/// case-insensitive; user-supplied aliases extend (or override) the built-ins.
class LabelAliasMap {
public:
    LabelAliasMap() {
        for (Label l : all_labels()) add(label_name(l), l);
        // Common tag spellings seen in annotated ingredient corpora.
        add("DF", Label::DryFresh);
        add("DRY/FRESH", Label::DryFresh);
        add("DRYFRESH", Label::DryFresh);
        add("TEMP", Label::Temperature);
        add("QTY", Label::Quantity);
        add("QUANT", Label::Quantity);
        add("ING", Label::Name);
        add("O", Label::Others);
        add("OTHER", Label::Others);
        add("PUNCT", Label::Others);
    }

    void add(const std::string& alias, Label target) {
        aliases_[normalize(alias)] = target;
    }

    std::optional<Label> resolve(const std::string& raw) const {
        auto it = aliases_.find(normalize(raw));
        if (it == aliases_.end()) return std::nullopt;
        return it->second;
    }

    Label resolve_or_throw(const std::string& raw) const {
        auto l = resolve(raw);
        if (!l) throw std::runtime_error("unknown label string: \"" + raw + "\"");
        return *l;
    }

    /// Entries added on top of the built-in table, in sorted order (for checkpoints).
    std::map<std::string, Label> entries() const {
        return {aliases_.begin(), aliases_.end()};
    }

    static std::string normalize(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        return out;
    }

private:
    std::map<std::string, Label> aliases_;
};

}  // namespace ingtag
