#pragma once

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ingtag/tensor.hpp"

namespace ingtag {

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer. State is kept per parameter
/// tensor; frozen tensors (requires_grad == false) are never touched.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }

    void step(const std::vector<Tensor>& params) {
        for (const Tensor& p : params) {
            if (!p.defined() || !p.requires_grad()) continue;
            TensorNode* n = p.node();
            if (!n->grad.empty() && n->grad.size() != n->value.size())
                throw std::invalid_argument("adam: gradient/parameter shape mismatch");

            State& st = state_[n];
            if (st.m.empty()) {
                st.m.assign(n->value.size(), 0.0);
                st.v.assign(n->value.size(), 0.0);
            }
            ++st.t;
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(st.t));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(st.t));
            for (std::size_t i = 0; i < n->value.size(); ++i) {
                const double g = n->grad.empty() ? 0.0 : n->grad[i];
                st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
                st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                n->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    static void zero_grad(const std::vector<Tensor>& params) {
        for (Tensor p : params)  // handles share the node
            if (p.defined()) p.zero_grad();
    }

    long step_count(const Tensor& p) const {
        auto it = state_.find(p.node());
        return it == state_.end() ? 0 : it->second.t;
    }

private:
    struct State {
        std::vector<double> m, v;
        long t = 0;
    };
    AdamConfig cfg_;
    std::unordered_map<TensorNode*, State> state_;
};

}  // namespace ingtag
