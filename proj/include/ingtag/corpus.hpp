#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ingtag/label.hpp"
#include "ingtag/phrase.hpp"
#include "ingtag/pos_tagger.hpp"
#include "ingtag/rng.hpp"
#include "ingtag/tokenizer.hpp"

namespace ingtag {

/// Corpus file problem, carrying the 1-based line number when known.
class CorpusError : public std::runtime_error {
public:
    CorpusError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Token index over lowercased surfaces. Indices are dense, assigned in
/// first-seen order. `oov` holds tokens absent from the pretrained embedding
/// file. Lookups of unseen tokens return nullopt; they never fail.
class Vocab {
public:
    int add(const std::string& lower) {
        if (frozen_) throw std::logic_error("Vocab::add on frozen vocab");
        auto it = index_.find(lower);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(tokens_.size());
        index_.emplace(lower, id);
        tokens_.push_back(lower);
        return id;
    }

    std::optional<int> find(const std::string& lower) const {
        auto it = index_.find(lower);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    void mark_oov(const std::string& lower) { oov_.insert(lower); }
    bool is_oov(const std::string& lower) const { return oov_.count(lower) > 0; }
    const std::set<std::string>& oov_set() const { return oov_; }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> tokens_;
    std::set<std::string> oov_;
    bool frozen_ = false;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

/// Rebuild Phrase::raw and token spans from surfaces joined by single spaces.
inline void rebuild_raw(Phrase& p) {
    std::string raw;
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
        if (i > 0) raw.push_back(' ');
        p.tokens[i].begin = raw.size();
        raw += p.tokens[i].surface;
        p.tokens[i].end = raw.size();
    }
    p.raw = std::move(raw);
}

}  // namespace detail

/// Read a CoNLL-style TSV corpus: one `SURFACE<TAB>POS<TAB>LABEL` line per
/// token, blank line between phrases, `#` comment lines. POS `_` means
/// "compute it"; LABEL `_` means unlabeled (all-or-nothing per phrase).
inline std::vector<Phrase> load_corpus(const std::string& path, const LabelAliasMap& aliases = {}) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file: " + path);

    std::vector<Phrase> phrases;
    Phrase current;
    std::vector<std::optional<Label>> gold;
    long line_no = 0;
    long block_start = 0;

    auto flush = [&]() {
        if (current.tokens.empty()) return;
        std::size_t labeled = 0;
        for (const auto& g : gold)
            if (g) ++labeled;
        if (labeled != 0 && labeled != gold.size())
            throw CorpusError("phrase mixes labeled and unlabeled tokens", block_start);
        if (labeled == gold.size()) {
            std::vector<Label> g;
            g.reserve(gold.size());
            for (const auto& o : gold) g.push_back(*o);
            current.gold = std::move(g);
        }
        detail::rebuild_raw(current);
        phrases.push_back(std::move(current));
        current = Phrase{};
        gold.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') continue;
        auto cols = detail::split_tabs(line);
        if (cols.size() != 3)
            throw CorpusError("expected 3 tab-separated columns, got " +
                                  std::to_string(cols.size()),
                              line_no);
        if (cols[0].empty()) throw CorpusError("empty token surface", line_no);
        if (current.tokens.empty()) block_start = line_no;

        Token t;
        t.surface = cols[0];
        t.lower = lowercase(cols[0]);
        t.pos = (cols[1] == "_" || cols[1].empty()) ? pos_tag_one(t.lower) : cols[1];
        current.tokens.push_back(std::move(t));

        if (cols[2] == "_") {
            gold.push_back(std::nullopt);
        } else {
            auto l = aliases.resolve(cols[2]);
            if (!l) throw CorpusError("unknown label string: \"" + cols[2] + "\"", line_no);
            gold.push_back(*l);
        }
    }
    flush();
    return phrases;
}

/// Write phrases in the canonical TSV format. load_corpus(save_corpus(x))
/// reproduces x structurally.
inline void save_corpus(const std::vector<Phrase>& phrases, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CorpusError("cannot open output file: " + path);
    for (const Phrase& p : phrases) {
        for (std::size_t i = 0; i < p.tokens.size(); ++i) {
            const Token& t = p.tokens[i];
            out << t.surface << '\t' << (t.pos.empty() ? "_" : t.pos) << '\t'
                << (p.gold ? label_name((*p.gold)[i]) : "_") << '\n';
        }
        out << '\n';
    }
    if (!out) throw CorpusError("write failed: " + path);
}

/// Build a vocab over every distinct lowercased token; tokens missing from
/// `embedding_index` land in the OOV set.
inline Vocab build_vocab(const std::vector<Phrase>& phrases,
                         const std::unordered_set<std::string>& embedding_index) {
    Vocab v;
    for (const Phrase& p : phrases) {
        for (const Token& t : p.tokens) {
            v.add(t.lower);
            if (embedding_index.find(t.lower) == embedding_index.end()) v.mark_oov(t.lower);
        }
    }
    v.freeze();
    return v;
}

/// Deterministic split for early stopping: shuffle under `seed`, first
/// ceil(n * dev_fraction) phrases become dev.
inline std::pair<std::vector<Phrase>, std::vector<Phrase>> split_train_dev(
    const std::vector<Phrase>& phrases, double dev_fraction, std::uint64_t seed) {
    if (dev_fraction < 0.0 || dev_fraction >= 1.0)
        throw std::invalid_argument("dev_fraction must be in [0, 1)");
    std::vector<std::size_t> order(phrases.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    auto n_dev = static_cast<std::size_t>(
        std::ceil(static_cast<double>(phrases.size()) * dev_fraction));
    std::vector<Phrase> dev, train;
    dev.reserve(n_dev);
    train.reserve(phrases.size() - n_dev);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_dev ? dev : train).push_back(phrases[order[i]]);
    }
    return {std::move(train), std::move(dev)};
}

/// Make a Phrase from raw text (tokenize + tag); no gold labels.
inline Phrase phrase_from_text(const std::string& raw) {
    Phrase p;
    p.raw = raw;
    p.tokens = tokenize(raw);
    apply_pos_tags(p.tokens);
    return p;
}

}  // namespace ingtag
