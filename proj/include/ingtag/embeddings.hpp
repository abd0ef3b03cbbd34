#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ingtag/phrase.hpp"
#include "ingtag/pos_tagger.hpp"
#include "ingtag/rng.hpp"
#include "ingtag/tensor.hpp"

namespace ingtag {

/// Per-token input vectors: pretrained rows are frozen, out-of-vocabulary rows
/// are trainable and created on first access with a seeded uniform init, so a
/// given (seed, token) pair always yields the same vector regardless of access
/// order.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim = 300, std::uint64_t oov_seed = 13)
        : dim_(dim), oov_seed_(oov_seed) {}

    std::size_t dim() const { return dim_; }
    std::uint64_t oov_seed() const { return oov_seed_; }
    void set_oov_seed(std::uint64_t s) { oov_seed_ = s; }

    void add_pretrained(const std::string& lower, std::vector<double> values) {
        if (values.size() != dim_)
            throw std::invalid_argument("embedding row dimension mismatch for: " + lower);
        pretrained_.emplace(lower, Tensor::from_values(std::move(values), {dim_}, false));
    }

    void add_oov_row(const std::string& lower, Tensor row) {
        oov_.emplace(lower, std::move(row));
    }

    /// Share an existing frozen row (no value copy).
    void add_pretrained_shared(const std::string& lower, const Tensor& row) {
        if (row.numel() != dim_)
            throw std::invalid_argument("embedding row dimension mismatch for: " + lower);
        pretrained_.emplace(lower, row);
    }

    bool has_pretrained(const std::string& lower) const { return pretrained_.count(lower) > 0; }
    bool has_oov_row(const std::string& lower) const { return oov_.count(lower) > 0; }

    /// The row for a token: pretrained if known, else the (possibly freshly
    /// created) trainable OOV row.
    Tensor row(const std::string& lower) {
        if (auto it = pretrained_.find(lower); it != pretrained_.end()) return it->second;
        if (auto it = oov_.find(lower); it != oov_.end()) return it->second;
        Tensor t = make_oov_vector(lower);
        oov_.emplace(lower, t);
        return t;
    }

    /// Deterministic OOV vector for (oov_seed, token): uniform in [-0.05, 0.05].
    Tensor make_oov_vector(const std::string& lower) const {
        Rng rng(oov_seed_ ^ fnv1a(lower));
        std::vector<double> v(dim_);
        for (double& x : v) x = rng.uniform(-0.05, 0.05);
        return Tensor::from_values(std::move(v), {dim_}, true);
    }

    /// Set of tokens the pretrained file covers (vocab building).
    std::unordered_set<std::string> index() const {
        std::unordered_set<std::string> s;
        s.reserve(pretrained_.size());
        for (const auto& [tok, _] : pretrained_) s.insert(tok);
        return s;
    }

    /// Flip the trainability of the pretrained rows (--tune-embeddings).
    void set_pretrained_trainable(bool trainable) {
        for (auto& [_, t] : pretrained_) t.set_requires_grad(trainable);
    }

    const std::unordered_map<std::string, Tensor>& pretrained_rows() const { return pretrained_; }
    const std::unordered_map<std::string, Tensor>& oov_rows() const { return oov_; }

    std::size_t skipped_lines() const { return skipped_lines_; }
    void note_skipped_line() { ++skipped_lines_; }

private:
    std::size_t dim_;
    std::uint64_t oov_seed_;
    std::unordered_map<std::string, Tensor> pretrained_;
    std::unordered_map<std::string, Tensor> oov_;
    std::size_t skipped_lines_ = 0;
};

/// `TOKEN v1 v2 ... vDIM` per line, space separated. Blank lines are skipped
/// and counted; a line with the wrong number of values is an error.
inline EmbeddingTable load_embeddings(const std::string& path, std::size_t dim = 300,
                                      std::uint64_t oov_seed = 13) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
    EmbeddingTable table(dim, oov_seed);
    std::string line;
    long line_no = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            table.note_skipped_line();
            continue;
        }
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        values.clear();
        double x;
        while (ss >> x) values.push_back(x);
        if (!ss.eof())
            throw std::runtime_error("embeddings line " + std::to_string(line_no) +
                                     ": malformed float value");
        if (values.size() != dim)
            throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim) + " values, got " +
                                     std::to_string(values.size()));
        table.add_pretrained(lowercase(token), values);
    }
    return table;
}

/// One trainable vector per POS tag, zero-initialized so an untrained model
/// reduces to pure word embeddings. Unknown tags resolve to the UNK row once
/// the table is frozen.
class PosEmbeddingTable {
public:
    explicit PosEmbeddingTable(std::size_t dim = 300) : dim_(dim) { ensure_tag(kUnkPosTag); }

    std::size_t dim() const { return dim_; }

    Tensor ensure_tag(const std::string& tag) {
        auto it = rows_.find(tag);
        if (it != rows_.end()) return it->second;
        if (frozen_) return rows_.at(kUnkPosTag);
        Tensor t = Tensor::zeros({dim_}, true);
        rows_.emplace(tag, t);
        return t;
    }

    Tensor row(const std::string& tag) { return ensure_tag(tag); }

    bool has(const std::string& tag) const { return rows_.count(tag) > 0; }
    const std::map<std::string, Tensor>& rows() const { return rows_; }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

private:
    std::size_t dim_;
    bool frozen_ = false;
    std::map<std::string, Tensor> rows_;  // ordered, for stable enumeration
};

/// Spec'd per-token encoding: word vector plus tag vector, stacked into an
/// [s x d] matrix. Gradients flow back into whichever rows are trainable.
inline Tensor encode_phrase(const Phrase& phrase, EmbeddingTable& emb, PosEmbeddingTable& pos_emb) {
    if (phrase.tokens.empty()) throw std::invalid_argument("encode_phrase: empty phrase");
    std::vector<Tensor> word_rows, tag_rows;
    word_rows.reserve(phrase.size());
    tag_rows.reserve(phrase.size());
    for (const Token& t : phrase.tokens) {
        word_rows.push_back(emb.row(t.lower));
        tag_rows.push_back(pos_emb.row(t.pos.empty() ? pos_tag_one(t.lower) : t.pos));
    }
    return stack_sum_rows(word_rows, tag_rows);
}

}  // namespace ingtag
