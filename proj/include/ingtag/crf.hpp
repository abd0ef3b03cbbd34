#pragma once

#include <array>
#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ingtag/label.hpp"
#include "ingtag/phrase.hpp"
#include "ingtag/pos_tagger.hpp"
#include "ingtag/rng.hpp"

namespace ingtag {

/// Sparse indicator features for one token position (all values 1.0).
struct FeatureVector {
    std::vector<std::string> names;
};

namespace crf_detail {

/// Collapsed character-class signature: X upper, x lower, d digit, other kept.
inline std::string word_shape(const std::string& s) {
    std::string shape;
    char prev = '\0';
    for (unsigned char c : s) {
        char cls;
        if (std::isupper(c)) cls = 'X';
        else if (std::islower(c)) cls = 'x';
        else if (std::isdigit(c)) cls = 'd';
        else cls = static_cast<char>(c);
        if (cls != prev) shape.push_back(cls);
        prev = cls;
    }
    return shape;
}

}  // namespace crf_detail

/// The documented template set: lexical window, POS trigram window, numeric
/// and punctuation indicators, short suffixes, word shape.
inline FeatureVector extract_features(const Phrase& phrase, std::size_t position) {
    if (position >= phrase.tokens.size())
        throw std::out_of_range("extract_features: position out of range");
    const auto& toks = phrase.tokens;
    const std::size_t s = toks.size();
    const Token& t = toks[position];
    const std::string prev_w = position > 0 ? toks[position - 1].lower : "<BOS>";
    const std::string next_w = position + 1 < s ? toks[position + 1].lower : "<EOS>";
    const std::string prev_p = position > 0 ? toks[position - 1].pos : "<BOS>";
    const std::string next_p = position + 1 < s ? toks[position + 1].pos : "<EOS>";

    FeatureVector f;
    f.names.reserve(16);
    f.names.push_back("w0=" + t.lower);
    f.names.push_back("w-1=" + prev_w);
    f.names.push_back("w+1=" + next_w);
    f.names.push_back("p0=" + t.pos);
    f.names.push_back("p-1=" + prev_p);
    f.names.push_back("p+1=" + next_p);
    f.names.push_back("p-1|p0=" + prev_p + "|" + t.pos);
    f.names.push_back("p0|p+1=" + t.pos + "|" + next_p);
    f.names.push_back("p-1|p0|p+1=" + prev_p + "|" + t.pos + "|" + next_p);
    if (detail::is_numeric_token(t.lower)) f.names.push_back("is_numeric");
    if (t.lower.find('/') != std::string::npos) f.names.push_back("has_slash");
    if (t.lower.size() >= 2) f.names.push_back("suf2=" + t.lower.substr(t.lower.size() - 2));
    if (t.lower.size() >= 3) f.names.push_back("suf3=" + t.lower.substr(t.lower.size() - 3));
    if (detail::is_punct_token(t.lower)) f.names.push_back("is_punct");
    f.names.push_back("shape=" + crf_detail::word_shape(t.surface));
    return f;
}

/// Linear-chain scorer: per-position emission weights over interned features
/// plus label-transition, start and stop weights. Decoding depends only on
/// score differences.
class CrfModel {
public:
    using LabelWeights = std::array<double, kNumLabels>;

    std::size_t num_features() const { return feature_names_.size(); }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    int intern(const std::string& name) {
        auto it = feature_ids_.find(name);
        if (it != feature_ids_.end()) return it->second;
        int id = static_cast<int>(feature_names_.size());
        feature_ids_.emplace(name, id);
        feature_names_.push_back(name);
        emission_.push_back(LabelWeights{});
        return id;
    }

    int find_feature(const std::string& name) const {
        auto it = feature_ids_.find(name);
        return it == feature_ids_.end() ? -1 : it->second;
    }

    double& emission(int feature_id, Label l) {
        return emission_[static_cast<std::size_t>(feature_id)][static_cast<std::size_t>(l)];
    }
    double emission(int feature_id, Label l) const {
        return emission_[static_cast<std::size_t>(feature_id)][static_cast<std::size_t>(l)];
    }

    double emission_score(const FeatureVector& f, Label l) const {
        double score = 0.0;
        for (const std::string& name : f.names) {
            int id = find_feature(name);
            if (id >= 0) score += emission(id, l);
        }
        return score;
    }

    std::array<LabelWeights, kNumLabels>& transition() { return transition_; }
    const std::array<LabelWeights, kNumLabels>& transition() const { return transition_; }
    LabelWeights& start() { return start_; }
    const LabelWeights& start() const { return start_; }
    LabelWeights& stop() { return stop_; }
    const LabelWeights& stop() const { return stop_; }

    std::vector<LabelWeights>& emission_table() { return emission_; }
    const std::vector<LabelWeights>& emission_table() const { return emission_; }

private:
    std::unordered_map<std::string, int> feature_ids_;
    std::vector<std::string> feature_names_;
    std::vector<LabelWeights> emission_;  // [feature][label]
    std::array<LabelWeights, kNumLabels> transition_{};  // [from][to]
    LabelWeights start_{};
    LabelWeights stop_{};
};

/// Exact argmax decoding. Ties at every backpointer (and at the final pick)
/// break toward the lowest label index via strict-greater comparison.
inline std::vector<Label> viterbi(const CrfModel& model, const Phrase& phrase) {
    const std::size_t s = phrase.tokens.size();
    if (s == 0) return {};
    constexpr std::size_t L = kNumLabels;

    std::vector<std::array<double, L>> dp(s);
    std::vector<std::array<std::size_t, L>> back(s);

    std::vector<FeatureVector> feats;
    feats.reserve(s);
    for (std::size_t i = 0; i < s; ++i) feats.push_back(extract_features(phrase, i));

    for (std::size_t y = 0; y < L; ++y)
        dp[0][y] = model.start()[y] + model.emission_score(feats[0], static_cast<Label>(y));

    for (std::size_t i = 1; i < s; ++i) {
        for (std::size_t y = 0; y < L; ++y) {
            double em = model.emission_score(feats[i], static_cast<Label>(y));
            double best = dp[i - 1][0] + model.transition()[0][y];
            std::size_t arg = 0;
            for (std::size_t prev = 1; prev < L; ++prev) {
                double cand = dp[i - 1][prev] + model.transition()[prev][y];
                if (cand > best) {
                    best = cand;
                    arg = prev;
                }
            }
            dp[i][y] = best + em;
            back[i][y] = arg;
        }
    }

    double best = dp[s - 1][0] + model.stop()[0];
    std::size_t arg = 0;
    for (std::size_t y = 1; y < L; ++y) {
        double cand = dp[s - 1][y] + model.stop()[y];
        if (cand > best) {
            best = cand;
            arg = y;
        }
    }

    std::vector<Label> path(s);
    path[s - 1] = static_cast<Label>(arg);
    for (std::size_t i = s - 1; i > 0; --i) {
        arg = back[i][arg];
        path[i - 1] = static_cast<Label>(arg);
    }
    return path;
}

/// Score of a specific path, accumulated left to right (start + emissions +
/// transitions + stop) — the same association order the decoder uses.
inline double path_score(const CrfModel& model, const Phrase& phrase,
                         const std::vector<Label>& path) {
    if (path.size() != phrase.tokens.size())
        throw std::invalid_argument("path_score: length mismatch");
    if (path.empty()) return 0.0;
    double score = model.start()[static_cast<std::size_t>(path[0])] +
                   model.emission_score(extract_features(phrase, 0), path[0]);
    for (std::size_t i = 1; i < path.size(); ++i) {
        score += model.transition()[static_cast<std::size_t>(path[i - 1])]
                                   [static_cast<std::size_t>(path[i])];
        score += model.emission_score(extract_features(phrase, i), path[i]);
    }
    score += model.stop()[static_cast<std::size_t>(path.back())];
    return score;
}

/// Averaged structured perceptron. Per phrase: decode with the current raw
/// weights; on a mismatch add the gold path's features and subtract the
/// predicted path's. Returns the exact mean of the weight vector snapshots
/// taken after each processed example (computed with the lazy-update trick).
inline CrfModel train_crf(const std::vector<Phrase>& train_set, int epochs, std::uint64_t seed) {
    for (std::size_t i = 0; i < train_set.size(); ++i)
        if (!train_set[i].gold)
            throw std::invalid_argument("train_crf: phrase " + std::to_string(i) +
                                        " has no gold labels");

    CrfModel w;
    // accumulators for averaging: u += c * delta at update time, avg = w - u/C
    std::vector<CrfModel::LabelWeights> u_emission;
    std::array<CrfModel::LabelWeights, kNumLabels> u_transition{};
    CrfModel::LabelWeights u_start{}, u_stop{};
    long c = 0;

    // intern all features once so ids are stable
    std::vector<std::vector<FeatureVector>> feats(train_set.size());
    for (std::size_t p = 0; p < train_set.size(); ++p) {
        feats[p].reserve(train_set[p].size());
        for (std::size_t i = 0; i < train_set[p].size(); ++i) {
            FeatureVector f = extract_features(train_set[p], i);
            for (const std::string& name : f.names) w.intern(name);
            feats[p].push_back(std::move(f));
        }
    }
    u_emission.assign(w.num_features(), CrfModel::LabelWeights{});

    auto bump_emission = [&](const FeatureVector& fv, Label l, double delta) {
        for (const std::string& name : fv.names) {
            int id = w.find_feature(name);
            w.emission(id, l) += delta;
            u_emission[static_cast<std::size_t>(id)][static_cast<std::size_t>(l)] +=
                static_cast<double>(c - 1) * delta;
        }
    };

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const std::size_t p = order[oi];
            const Phrase& phrase = train_set[p];
            ++c;
            std::vector<Label> pred = viterbi(w, phrase);
            const std::vector<Label>& gold = *phrase.gold;
            if (pred == gold) continue;

            for (std::size_t i = 0; i < gold.size(); ++i) {
                if (gold[i] == pred[i]) continue;
                bump_emission(feats[p][i], gold[i], +1.0);
                bump_emission(feats[p][i], pred[i], -1.0);
            }
            auto bump_trans = [&](std::size_t a, std::size_t b, double delta) {
                w.transition()[a][b] += delta;
                u_transition[a][b] += static_cast<double>(c - 1) * delta;
            };
            for (std::size_t i = 1; i < gold.size(); ++i) {
                auto ga = static_cast<std::size_t>(gold[i - 1]), gb = static_cast<std::size_t>(gold[i]);
                auto pa = static_cast<std::size_t>(pred[i - 1]), pb = static_cast<std::size_t>(pred[i]);
                if (ga != pa || gb != pb) {
                    bump_trans(ga, gb, +1.0);
                    bump_trans(pa, pb, -1.0);
                }
            }
            if (gold.front() != pred.front()) {
                w.start()[static_cast<std::size_t>(gold.front())] += 1.0;
                u_start[static_cast<std::size_t>(gold.front())] += static_cast<double>(c - 1);
                w.start()[static_cast<std::size_t>(pred.front())] -= 1.0;
                u_start[static_cast<std::size_t>(pred.front())] -= static_cast<double>(c - 1);
            }
            if (gold.back() != pred.back()) {
                w.stop()[static_cast<std::size_t>(gold.back())] += 1.0;
                u_stop[static_cast<std::size_t>(gold.back())] += static_cast<double>(c - 1);
                w.stop()[static_cast<std::size_t>(pred.back())] -= 1.0;
                u_stop[static_cast<std::size_t>(pred.back())] -= static_cast<double>(c - 1);
            }
        }
    }

    if (c > 0) {
        const double C = static_cast<double>(c);
        for (std::size_t f = 0; f < w.num_features(); ++f)
            for (std::size_t l = 0; l < kNumLabels; ++l)
                w.emission_table()[f][l] -= u_emission[f][l] / C;
        for (std::size_t a = 0; a < kNumLabels; ++a)
            for (std::size_t b = 0; b < kNumLabels; ++b)
                w.transition()[a][b] -= u_transition[a][b] / C;
        for (std::size_t l = 0; l < kNumLabels; ++l) {
            w.start()[l] -= u_start[l] / C;
            w.stop()[l] -= u_stop[l] / C;
        }
    }
    return w;
}

/// Single-label baseline floor: always predicts the most frequent training
/// label (lowest index on ties).
inline Label majority_label(const std::vector<Phrase>& train_set) {
    std::array<std::size_t, kNumLabels> counts{};
    for (const Phrase& p : train_set) {
        if (!p.gold) continue;
        for (Label l : *p.gold) counts[static_cast<std::size_t>(l)]++;
    }
    std::size_t best = 0;
    for (std::size_t l = 1; l < kNumLabels; ++l)
        if (counts[l] > counts[best]) best = l;
    return static_cast<Label>(best);
}

}  // namespace ingtag
