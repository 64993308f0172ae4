#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "gnnbench/rng.hpp"
#include "gnnbench/tensor.hpp"

namespace gnnbench {

struct Param {
    std::string name;
    Tensor2 value;
    Tensor2 grad;
    Tensor2 m;  // first moment (adam) / velocity (sgd momentum)
    Tensor2 v;  // second moment (adam)
    bool is_bias = false;
};

// Named parameters with matching gradient buffers. Creation order is the
// deterministic init order, all draws flowing from one seeded stream. A deque
// keeps references and gradient-sink pointers stable across additions.
struct ParamSet {
    std::deque<Param> params;
    std::uint64_t init_seed = 0;
    Rng init_rng{0};

    explicit ParamSet(std::uint64_t seed) : init_seed(seed), init_rng(seed) {}

    // Glorot-uniform weight matrix
    Param& add_weight(const std::string& name, int rows, int cols) {
        Param p;
        p.name = name;
        p.value = Tensor2(rows, cols);
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (auto& w : p.value.data) w = init_rng.uniform(-limit, limit);
        finish(p);
        return params.back();
    }

    Param& add_bias(const std::string& name, int cols) {
        Param p;
        p.name = name;
        p.value = Tensor2(1, cols);
        p.is_bias = true;
        finish(p);
        return params.back();
    }

    Param& add_scalar(const std::string& name, double init) {
        Param p;
        p.name = name;
        p.value = Tensor2(1, 1, init);
        finish(p);
        return params.back();
    }

    void zero_grads() {
        for (auto& p : params) p.grad.fill(0.0);
    }

    std::vector<Tensor2> snapshot() const {
        std::vector<Tensor2> out;
        out.reserve(params.size());
        for (const auto& p : params) out.push_back(p.value);
        return out;
    }

    void restore(const std::vector<Tensor2>& snap) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i].value = snap[i];
    }

private:
    void finish(Param& p) {
        p.grad = Tensor2::zeros_like(p.value);
        p.m = Tensor2::zeros_like(p.value);
        p.v = Tensor2::zeros_like(p.value);
        params.push_back(std::move(p));
    }
};

enum class OptimKind { adam, sgd };
enum class SchedKind { none, step_lr };

struct OptimState {
    OptimKind kind = OptimKind::adam;
    double learning_rate = 1e-2;
    double l2 = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double momentum = 0.0;  // sgd only
    SchedKind scheduler = SchedKind::none;
    int sched_step = 50;
    double sched_gamma = 0.5;
    long long step_count = 0;  // adam bias-correction counter
};

// Step-LR halves (by gamma) every `sched_step` epochs; epochs are 0-based.
inline double effective_lr(const OptimState& s, int epoch) {
    if (s.scheduler == SchedKind::step_lr && s.sched_step > 0)
        return s.learning_rate * std::pow(s.sched_gamma, epoch / s.sched_step);
    return s.learning_rate;
}

// One update over every parameter. L2 is added to the gradient as l2*w before
// the moment update; biases are exempt.
inline void optimizer_step(ParamSet& params, OptimState& state, int epoch) {
    const double lr = effective_lr(state, epoch);
    ++state.step_count;
    for (Param& p : params.params) {
        if (!p.grad.all_finite())
            throw std::domain_error("optimizer_step: non-finite gradient in " + p.name);
        const double l2 = p.is_bias ? 0.0 : state.l2;
        if (state.kind == OptimKind::adam) {
            const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
            const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad.data[i] + l2 * p.value.data[i];
                p.m.data[i] = state.beta1 * p.m.data[i] + (1.0 - state.beta1) * g;
                p.v.data[i] = state.beta2 * p.v.data[i] + (1.0 - state.beta2) * g * g;
                const double mhat = p.m.data[i] / bc1;
                const double vhat = p.v.data[i] / bc2;
                p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
            }
        } else {
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad.data[i] + l2 * p.value.data[i];
                p.m.data[i] = state.momentum * p.m.data[i] + g;
                p.value.data[i] -= lr * p.m.data[i];
            }
        }
    }
}

}  // namespace gnnbench
