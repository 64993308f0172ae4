#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gnnbench {

// Dense row-major matrix of doubles. All numeric work in the library runs in
// 64-bit so that trained trajectories are bit-reproducible across reruns.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor2: negative shape");
    }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static Tensor2 zeros_like(const Tensor2& o) { return Tensor2(o.rows, o.cols); }

    void fill(double v) {
        for (auto& x : data) x = v;
    }
};

namespace detail {

inline void require_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

inline Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    require_shape(a.cols == b.rows, "matmul inner dimensions");
    Tensor2 out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<std::size_t>(i) * b.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// out += a^T * b
inline void matmul_at_b_acc(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    require_shape(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols,
                  "matmul_at_b accumulate");
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = &a.data[static_cast<std::size_t>(k) * a.cols];
        const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
        for (int i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

// out += a * b^T
inline void matmul_a_bt_acc(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    require_shape(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows,
                  "matmul_a_bt accumulate");
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = &b.data[static_cast<std::size_t>(j) * b.cols];
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            orow[j] += s;
        }
    }
}

}  // namespace detail
}  // namespace gnnbench
