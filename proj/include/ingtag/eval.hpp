#pragma once

#include <array>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ingtag/label.hpp"
#include "ingtag/phrase.hpp"

namespace ingtag {

/// Token-level metrics. Raw (unrounded) percentages; rounding to two decimals
/// happens only when a table is printed.
struct MetricReport {
    struct PerLabel {
        double recall = 0.0;     // percent
        double precision = 0.0;  // percent
        double f1 = 0.0;         // percent
        std::size_t support = 0; // gold token count
        std::size_t predicted = 0;
    };
    std::array<PerLabel, kNumLabels> per_label{};
    double micro_recall = 0.0, micro_precision = 0.0, micro_f1 = 0.0;
    double macro_f1 = 0.0;
    std::array<std::array<std::size_t, kNumLabels>, kNumLabels> confusion{};  // [gold][pred]
    std::size_t total_tokens = 0;
};

inline double f1_of(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Token-level scoring of predictions against gold labels. Predictions must be
/// aligned one-to-one with the gold phrases' tokens.
inline MetricReport evaluate(const std::vector<Phrase>& gold,
                             const std::vector<std::vector<Label>>& pred) {
    if (gold.size() != pred.size())
        throw std::invalid_argument("evaluate: " + std::to_string(pred.size()) +
                                    " predictions for " + std::to_string(gold.size()) +
                                    " phrases");
    MetricReport r;
    for (std::size_t p = 0; p < gold.size(); ++p) {
        if (!gold[p].gold)
            throw std::invalid_argument("evaluate: phrase " + std::to_string(p) +
                                        " has no gold labels");
        const auto& g = *gold[p].gold;
        if (g.size() != pred[p].size())
            throw std::invalid_argument("evaluate: alignment mismatch at phrase " +
                                        std::to_string(p));
        for (std::size_t i = 0; i < g.size(); ++i) {
            r.confusion[static_cast<std::size_t>(g[i])][static_cast<std::size_t>(pred[p][i])]++;
            ++r.total_tokens;
        }
    }

    std::size_t tp_total = 0;
    double macro_sum = 0.0;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
        std::size_t tp = r.confusion[l][l];
        std::size_t gold_count = 0, pred_count = 0;
        for (std::size_t k = 0; k < kNumLabels; ++k) {
            gold_count += r.confusion[l][k];
            pred_count += r.confusion[k][l];
        }
        auto& pl = r.per_label[l];
        pl.support = gold_count;
        pl.predicted = pred_count;
        pl.recall = gold_count > 0 ? 100.0 * static_cast<double>(tp) / static_cast<double>(gold_count) : 0.0;
        pl.precision = pred_count > 0 ? 100.0 * static_cast<double>(tp) / static_cast<double>(pred_count) : 0.0;
        pl.f1 = f1_of(pl.precision, pl.recall);
        macro_sum += pl.f1;
        tp_total += tp;
    }
    r.macro_f1 = macro_sum / static_cast<double>(kNumLabels);
    // single label per token: precision, recall and F1 all reduce to pooled accuracy
    const double micro =
        r.total_tokens > 0 ? 100.0 * static_cast<double>(tp_total) / static_cast<double>(r.total_tokens) : 0.0;
    r.micro_recall = r.micro_precision = r.micro_f1 = micro;
    return r;
}

/// A tagger is anything that labels a phrase's tokens.
using Tagger = std::function<std::vector<Label>(const Phrase&)>;

inline MetricReport evaluate_tagger(const Tagger& tagger, const std::vector<Phrase>& test) {
    std::vector<std::vector<Label>> preds;
    preds.reserve(test.size());
    for (const Phrase& p : test) preds.push_back(tagger(p));
    return evaluate(test, preds);
}

/// Micro-F1 grid over train-source x test-source combinations.
/// grid[t][m] = model m evaluated on test set t.
template <std::size_t N = 3>
std::array<std::array<double, N>, N> grid_evaluate(
    const std::array<Tagger, N>& models, const std::array<std::vector<Phrase>, N>& tests) {
    for (const auto& t : tests)
        if (t.empty()) throw std::invalid_argument("grid_evaluate: missing test set");
    std::array<std::array<double, N>, N> grid{};
    for (std::size_t t = 0; t < N; ++t)
        for (std::size_t m = 0; m < N; ++m) grid[t][m] = evaluate_tagger(models[m], tests[t]).micro_f1;
    return grid;
}

// ---------------------------------------------------------------------------
// presentation

inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// Aligned per-entity table (Recall, Precision, F1 column order) plus micro
/// and macro summary lines.
inline std::string format_report(const MetricReport& r) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %8s %10s %9s %9s\n", "Entity", "Recall",
                  "Precision", "F1", "Support");
    out += line;
    for (Label l : all_labels()) {
        const auto& pl = r.per_label[static_cast<std::size_t>(l)];
        std::snprintf(line, sizeof(line), "%-12s %8s %10s %9s %9zu\n", label_display_name(l),
                      format_pct(pl.recall).c_str(), format_pct(pl.precision).c_str(),
                      format_pct(pl.f1).c_str(), pl.support);
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-12s %8s %10s %9s %9zu\n", "micro",
                  format_pct(r.micro_recall).c_str(), format_pct(r.micro_precision).c_str(),
                  format_pct(r.micro_f1).c_str(), r.total_tokens);
    out += line;
    std::snprintf(line, sizeof(line), "%-12s %8s %10s %9s\n", "macro", "-", "-",
                  format_pct(r.macro_f1).c_str());
    out += line;
    return out;
}

/// Machine-readable key=value lines, one metric per line.
inline std::string format_report_kv(const MetricReport& r) {
    std::string out;
    for (Label l : all_labels()) {
        const auto& pl = r.per_label[static_cast<std::size_t>(l)];
        std::string key = LabelAliasMap::normalize(label_name(l));
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out += key + ".recall=" + format_pct(pl.recall) + "\n";
        out += key + ".precision=" + format_pct(pl.precision) + "\n";
        out += key + ".f1=" + format_pct(pl.f1) + "\n";
        out += key + ".support=" + std::to_string(pl.support) + "\n";
    }
    out += "micro.recall=" + format_pct(r.micro_recall) + "\n";
    out += "micro.precision=" + format_pct(r.micro_precision) + "\n";
    out += "micro.f1=" + format_pct(r.micro_f1) + "\n";
    out += "macro.f1=" + format_pct(r.macro_f1) + "\n";
    out += "tokens=" + std::to_string(r.total_tokens) + "\n";
    return out;
}

template <std::size_t N = 3>
std::string format_grid(const std::array<std::array<double, N>, N>& grid,
                        const std::array<std::string, N>& names) {
    std::string out = "Testing \\ Training";
    char cell[64];
    for (const auto& n : names) {
        std::snprintf(cell, sizeof(cell), " %12s", n.c_str());
        out += cell;
    }
    out += "\n";
    for (std::size_t t = 0; t < N; ++t) {
        std::snprintf(cell, sizeof(cell), "%-18s", names[t].c_str());
        out += cell;
        for (std::size_t m = 0; m < N; ++m) {
            std::snprintf(cell, sizeof(cell), " %12s", format_pct(grid[t][m]).c_str());
            out += cell;
        }
        out += "\n";
    }
    return out;
}

}  // namespace ingtag
