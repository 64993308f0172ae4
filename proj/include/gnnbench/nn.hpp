#pragma once

#include <utility>
#include <vector>

#include "gnnbench/tape.hpp"

namespace gnnbench {

// Forward-only functional forms of the dense primitives; the tape provides
// the same math with gradients. These validate their inputs, so they double
// as the reference surface in tests.

inline Tensor2 linear_forward(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
    if (!x.all_finite() || !w.all_finite() || !b.all_finite())
        throw std::domain_error("linear_forward: non-finite input");
    Tensor2 out = detail::matmul(x, w);
    detail::require_shape(b.rows == 1 && b.cols == out.cols, "linear_forward bias");
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += b.at(0, j);
    return out;
}

inline Tensor2 relu(const Tensor2& x) {
    if (!x.all_finite()) throw std::domain_error("relu: non-finite input");
    Tensor2 out = x;
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

inline Tensor2 dropout(const Tensor2& x, double p, bool train, Rng& rng) {
    Tape t;
    const int in = t.input(x);
    return t.value(t.dropout(in, p, train, rng));
}

inline std::pair<double, Tensor2> softmax_cross_entropy(const Tensor2& logits,
                                                        const std::vector<int>& labels) {
    Tape t;
    auto [loss, probs] = t.softmax_cross_entropy(t.input(logits), labels);
    return {t.value(loss).at(0, 0), probs};
}

inline std::vector<int> argmax_rows(const Tensor2& m) {
    std::vector<int> out(m.rows, 0);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 1; j < m.cols; ++j)
            if (m.at(i, j) > m.at(i, out[i])) out[i] = j;
    }
    return out;
}

inline double accuracy(const Tensor2& logits, const std::vector<int>& labels) {
    if (logits.rows == 0) return 0.0;
    const auto pred = argmax_rows(logits);
    int correct = 0;
    for (int i = 0; i < logits.rows; ++i) correct += pred[i] == labels[i];
    return static_cast<double>(correct) / logits.rows;
}

}  // namespace gnnbench
