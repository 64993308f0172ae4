#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gnnbench/batch.hpp"
#include "gnnbench/models.hpp"
#include "gnnbench/tape.hpp"

namespace testsupport {

// Independent gradient oracle: central finite differences over the loss as a
// black-box function of the parameters. Touches only the forward path, never
// the tape's backward machinery.

struct FdReport {
    bool pass = true;
    std::string first_failure;
    double worst_rel_err = 0.0;
};

// Moves every parameter to a generic point. Zero-initialized biases put
// stacked-relu pre-activations exactly on the kink, where central differences
// measure the half-subgradient and disagree with any valid analytic choice;
// a small random offset makes such events measure-zero.
inline void jitter_params(gnnbench::ParamSet& params, std::uint64_t seed, double scale = 0.05) {
    gnnbench::Rng rng(seed);
    for (auto& p : params.params)
        for (auto& v : p.value.data) v += rng.uniform(-scale, scale);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// loss() must recompute the forward pass from the current parameter values.
inline FdReport finite_difference_check(gnnbench::ParamSet& params,
                                        const std::function<double()>& loss,
                                        const std::function<void()>& backward,
                                        double h = 1e-5, double tol = 1e-4) {
    params.zero_grads();
    backward();
    FdReport report;
    for (auto& p : params.params) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value.data[i];
            p.value.data[i] = saved + h;
            const double up = loss();
            p.value.data[i] = saved - h;
            const double down = loss();
            p.value.data[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = p.grad.data[i];
            const double err = rel_err(fd, an);
            report.worst_rel_err = std::max(report.worst_rel_err, err);
            if (err > tol && report.pass) {
                report.pass = false;
                report.first_failure = p.name + "[" + std::to_string(i) + "]: analytic " +
                                       std::to_string(an) + " vs fd " + std::to_string(fd);
            }
        }
    }
    return report;
}

// Convenience wrapper: mean cross-entropy of `model` on `batch` (eval mode,
// dropout off so the loss is a deterministic function of the parameters).
// Parameters are jittered to a generic point first.
inline FdReport check_model_gradients(gnnbench::Model& model, const gnnbench::GraphBatch& batch,
                                      double h = 1e-5, double tol = 1e-4) {
    using namespace gnnbench;
    jitter_params(model.params(), 0xFDC0FFEE);
    const auto loss_value = [&]() {
        Tape tape;
        Rng rng(0);
        const int logits = model.forward(tape, batch, false, rng);
        auto [loss_id, probs] = tape.softmax_cross_entropy(logits, batch.labels);
        return tape.value(loss_id).at(0, 0);
    };
    const auto backward = [&]() {
        Tape tape;
        Rng rng(0);
        const int logits = model.forward(tape, batch, false, rng);
        auto [loss_id, probs] = tape.softmax_cross_entropy(logits, batch.labels);
        tape.backward(loss_id);
    };
    return finite_difference_check(model.params(), loss_value, backward, h, tol);
}

}  // namespace testsupport
