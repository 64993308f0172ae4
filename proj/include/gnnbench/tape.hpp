#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "gnnbench/rng.hpp"
#include "gnnbench/tensor.hpp"

namespace gnnbench {

// Reverse-mode gradients over a recorded tape of whole-tensor ops. A model
// builds one tape per forward pass; node ids are creation-ordered, so the
// reverse sweep is already topological. Parameter leaves accumulate their
// gradient into an external sink owned by the ParamSet.
class Tape {
public:
    int input(Tensor2 v) { return push(std::move(v), false, nullptr); }

    int param(const Tensor2& value, Tensor2* grad_sink) {
        return push(value, true, grad_sink);
    }

    const Tensor2& value(int id) const { return nodes_[id].value; }
    const Tensor2& grad(int id) const { return nodes_[id].grad; }

    int matmul(int a, int b) {
        const int id = push(detail::matmul(val(a), val(b)), needs(a) || needs(b), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [a, b, id](Tape& t) {
            if (t.needs(a)) detail::matmul_a_bt_acc(t.nodes_[id].grad, t.val(b), t.nodes_[a].grad);
            if (t.needs(b)) detail::matmul_at_b_acc(t.val(a), t.nodes_[id].grad, t.nodes_[b].grad);
        };
        return id;
    }

    // m + bias broadcast over rows; bias is 1 x cols
    int add_rowvec(int m, int bias) {
        const Tensor2& mm = val(m);
        const Tensor2& bb = val(bias);
        detail::require_shape(bb.rows == 1 && bb.cols == mm.cols, "add_rowvec");
        Tensor2 out = mm;
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < out.cols; ++j) out.at(i, j) += bb.at(0, j);
        const int id = push(std::move(out), needs(m) || needs(bias), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [m, bias, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.needs(m))
                for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[m].grad.data[i] += g.data[i];
            if (t.needs(bias))
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) t.nodes_[bias].grad.at(0, j) += g.at(i, j);
        };
        return id;
    }

    int add(int a, int b) {
        detail::require_shape(val(a).same_shape(val(b)), "add");
        Tensor2 out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += val(b).data[i];
        const int id = push(std::move(out), needs(a) || needs(b), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.needs(a))
                for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad.data[i] += g.data[i];
            if (t.needs(b))
                for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[b].grad.data[i] += g.data[i];
        };
        return id;
    }

    // alpha * a + b, alpha fixed
    int axpy(double alpha, int a, int b) {
        detail::require_shape(val(a).same_shape(val(b)), "axpy");
        Tensor2 out = val(b);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += alpha * val(a).data[i];
        const int id = push(std::move(out), needs(a) || needs(b), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [alpha, a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.needs(a))
                for (std::size_t i = 0; i < g.size(); ++i)
                    t.nodes_[a].grad.data[i] += alpha * g.data[i];
            if (t.needs(b))
                for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[b].grad.data[i] += g.data[i];
        };
        return id;
    }

    // (1 + eps) * self + nbr with a trainable scalar eps (1x1 node)
    int gin_combine(int self, int nbr, int eps) {
        detail::require_shape(val(self).same_shape(val(nbr)), "gin_combine");
        detail::require_shape(val(eps).rows == 1 && val(eps).cols == 1, "gin_combine eps");
        const double e = val(eps).at(0, 0);
        Tensor2 out = val(nbr);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += (1.0 + e) * val(self).data[i];
        const int id = push(std::move(out), true, nullptr);
        nodes_[id].back = [self, nbr, eps, id, e](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.needs(self))
                for (std::size_t i = 0; i < g.size(); ++i)
                    t.nodes_[self].grad.data[i] += (1.0 + e) * g.data[i];
            if (t.needs(nbr))
                for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[nbr].grad.data[i] += g.data[i];
            if (t.needs(eps)) {
                double s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) s += g.data[i] * t.val(self).data[i];
                t.nodes_[eps].grad.at(0, 0) += s;
            }
        };
        return id;
    }

    int relu(int x) {
        Tensor2 out = val(x);
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& in = t.val(x);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (in.data[i] > 0.0) t.nodes_[x].grad.data[i] += g.data[i];
        };
        return id;
    }

    // Inverted dropout: kept units scaled by 1/(1-p); identity at inference
    // or when p == 0.
    int dropout(int x, double p, bool train, Rng& rng) {
        if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
        if (!train || p == 0.0) return x;
        const double scale = 1.0 / (1.0 - p);
        auto mask = std::make_shared<std::vector<double>>(val(x).size());
        Tensor2 out = val(x);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double keep = rng.uniform() >= p ? scale : 0.0;
            (*mask)[i] = keep;
            out.data[i] *= keep;
        }
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id, mask](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (std::size_t i = 0; i < g.size(); ++i)
                t.nodes_[x].grad.data[i] += g.data[i] * (*mask)[i];
        };
        return id;
    }

    int concat_cols(int a, int b) {
        const Tensor2& ta = val(a);
        const Tensor2& tb = val(b);
        detail::require_shape(ta.rows == tb.rows, "concat_cols");
        Tensor2 out(ta.rows, ta.cols + tb.cols);
        for (int i = 0; i < ta.rows; ++i) {
            for (int j = 0; j < ta.cols; ++j) out.at(i, j) = ta.at(i, j);
            for (int j = 0; j < tb.cols; ++j) out.at(i, ta.cols + j) = tb.at(i, j);
        }
        const int id = push(std::move(out), needs(a) || needs(b), nullptr);
        if (!nodes_[id].requires_grad) return id;
        const int acols = ta.cols, bcols = tb.cols;
        nodes_[id].back = [a, b, id, acols, bcols](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (int i = 0; i < g.rows; ++i) {
                if (t.needs(a))
                    for (int j = 0; j < acols; ++j) t.nodes_[a].grad.at(i, j) += g.at(i, j);
                if (t.needs(b))
                    for (int j = 0; j < bcols; ++j) t.nodes_[b].grad.at(i, j) += g.at(i, acols + j);
            }
        };
        return id;
    }

    // Each row scaled to unit L2 norm; rows with norm below 1e-12 pass
    // through as zeros.
    int row_l2_normalize(int x) {
        const Tensor2& in = val(x);
        Tensor2 out = in;
        auto norms = std::make_shared<std::vector<double>>(in.rows, 0.0);
        for (int i = 0; i < in.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < in.cols; ++j) s += in.at(i, j) * in.at(i, j);
            const double norm = std::sqrt(s);
            (*norms)[i] = norm;
            if (norm > 1e-12)
                for (int j = 0; j < in.cols; ++j) out.at(i, j) /= norm;
            else
                for (int j = 0; j < in.cols; ++j) out.at(i, j) = 0.0;
        }
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id, norms](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& y = t.nodes_[id].value;
            for (int i = 0; i < g.rows; ++i) {
                const double norm = (*norms)[i];
                if (norm <= 1e-12) continue;
                double dot = 0.0;
                for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < g.cols; ++j)
                    t.nodes_[x].grad.at(i, j) += (g.at(i, j) - dot * y.at(i, j)) / norm;
            }
        };
        return id;
    }

    // out[v] = sum of x rows over adj[v]; adjacency uses row indices of x and
    // must outlive the tape.
    int scatter_sum(int x, const std::vector<std::vector<int>>* adj) {
        const Tensor2& in = val(x);
        check_index_lists(*adj, in.rows);
        Tensor2 out(static_cast<int>(adj->size()), in.cols);
        for (std::size_t v = 0; v < adj->size(); ++v)
            for (int u : (*adj)[v])
                for (int j = 0; j < in.cols; ++j) out.at(static_cast<int>(v), j) += in.at(u, j);
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id, adj](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (std::size_t v = 0; v < adj->size(); ++v)
                for (int u : (*adj)[v])
                    for (int j = 0; j < g.cols; ++j)
                        t.nodes_[x].grad.at(u, j) += g.at(static_cast<int>(v), j);
        };
        return id;
    }

    // Mean over a node's neighborhood; an empty neighborhood yields the zero
    // vector.
    int scatter_mean(int x, const std::vector<std::vector<int>>* adj) {
        const Tensor2& in = val(x);
        check_index_lists(*adj, in.rows);
        Tensor2 out(static_cast<int>(adj->size()), in.cols);
        for (std::size_t v = 0; v < adj->size(); ++v) {
            if ((*adj)[v].empty()) continue;
            const double inv = 1.0 / static_cast<double>((*adj)[v].size());
            for (int u : (*adj)[v])
                for (int j = 0; j < in.cols; ++j)
                    out.at(static_cast<int>(v), j) += inv * in.at(u, j);
        }
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id, adj](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (std::size_t v = 0; v < adj->size(); ++v) {
                if ((*adj)[v].empty()) continue;
                const double inv = 1.0 / static_cast<double>((*adj)[v].size());
                for (int u : (*adj)[v])
                    for (int j = 0; j < g.cols; ++j)
                        t.nodes_[x].grad.at(u, j) += inv * g.at(static_cast<int>(v), j);
            }
        };
        return id;
    }

    // Componentwise max over the neighborhood, gradient routed to the first
    // argmax contributor; empty neighborhoods yield the zero vector.
    int scatter_max(int x, const std::vector<std::vector<int>>* adj) {
        const Tensor2& in = val(x);
        check_index_lists(*adj, in.rows);
        const int n_out = static_cast<int>(adj->size());
        Tensor2 out(n_out, in.cols);
        auto argmax = std::make_shared<std::vector<int>>(
            static_cast<std::size_t>(n_out) * in.cols, -1);
        for (int v = 0; v < n_out; ++v) {
            for (int j = 0; j < in.cols; ++j) {
                double best = -std::numeric_limits<double>::infinity();
                int best_u = -1;
                for (int u : (*adj)[v])
                    if (in.at(u, j) > best) {
                        best = in.at(u, j);
                        best_u = u;
                    }
                if (best_u >= 0) {
                    out.at(v, j) = best;
                    (*argmax)[static_cast<std::size_t>(v) * in.cols + j] = best_u;
                }
            }
        }
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        const int cols = in.cols;
        nodes_[id].back = [x, id, argmax, cols](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (int v = 0; v < g.rows; ++v)
                for (int j = 0; j < cols; ++j) {
                    const int u = (*argmax)[static_cast<std::size_t>(v) * cols + j];
                    if (u >= 0) t.nodes_[x].grad.at(u, j) += g.at(v, j);
                }
        };
        return id;
    }

    int graph_pool_sum(int x, const std::vector<int>* graph_index, int num_graphs) {
        const Tensor2& in = val(x);
        check_graph_index(*graph_index, in.rows, num_graphs);
        Tensor2 out(num_graphs, in.cols);
        for (int v = 0; v < in.rows; ++v)
            for (int j = 0; j < in.cols; ++j) out.at((*graph_index)[v], j) += in.at(v, j);
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        nodes_[id].back = [x, id, graph_index](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& in2 = t.val(x);
            for (int v = 0; v < in2.rows; ++v)
                for (int j = 0; j < in2.cols; ++j)
                    t.nodes_[x].grad.at(v, j) += g.at((*graph_index)[v], j);
        };
        return id;
    }

    int graph_pool_max(int x, const std::vector<int>* graph_index, int num_graphs) {
        const Tensor2& in = val(x);
        check_graph_index(*graph_index, in.rows, num_graphs);
        Tensor2 out(num_graphs, in.cols);
        auto argmax = std::make_shared<std::vector<int>>(
            static_cast<std::size_t>(num_graphs) * in.cols, -1);
        for (int v = 0; v < in.rows; ++v) {
            const int g = (*graph_index)[v];
            for (int j = 0; j < in.cols; ++j) {
                auto& slot = (*argmax)[static_cast<std::size_t>(g) * in.cols + j];
                if (slot < 0 || in.at(v, j) > out.at(g, j)) {
                    out.at(g, j) = in.at(v, j);
                    slot = v;
                }
            }
        }
        const int id = push(std::move(out), needs(x), nullptr);
        if (!nodes_[id].requires_grad) return id;
        const int cols = in.cols;
        nodes_[id].back = [x, id, argmax, cols](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            for (int gi = 0; gi < g.rows; ++gi)
                for (int j = 0; j < cols; ++j) {
                    const int v = (*argmax)[static_cast<std::size_t>(gi) * cols + j];
                    if (v >= 0) t.nodes_[x].grad.at(v, j) += g.at(gi, j);
                }
        };
        return id;
    }

    // Fused stable softmax + mean cross entropy. Returns (loss id, probs).
    std::pair<int, Tensor2> softmax_cross_entropy(int logits, const std::vector<int>& labels) {
        const Tensor2& z = val(logits);
        detail::require_shape(static_cast<int>(labels.size()) == z.rows, "cross entropy labels");
        if (!z.all_finite()) throw std::domain_error("softmax_cross_entropy: non-finite logits");
        auto probs = std::make_shared<Tensor2>(z.rows, z.cols);
        double loss = 0.0;
        for (int i = 0; i < z.rows; ++i) {
            if (labels[i] < 0 || labels[i] >= z.cols)
                throw std::invalid_argument("cross entropy: label out of range");
            double mx = z.at(i, 0);
            for (int j = 1; j < z.cols; ++j) mx = std::max(mx, z.at(i, j));
            double denom = 0.0;
            for (int j = 0; j < z.cols; ++j) denom += std::exp(z.at(i, j) - mx);
            const double log_denom = std::log(denom);
            for (int j = 0; j < z.cols; ++j)
                probs->at(i, j) = std::exp(z.at(i, j) - mx - log_denom);
            loss -= (z.at(i, labels[i]) - mx - log_denom);
        }
        loss /= z.rows;
        const int id = push(Tensor2(1, 1, loss), needs(logits), nullptr);
        if (nodes_[id].requires_grad) {
            auto labels_copy = std::make_shared<std::vector<int>>(labels);
            nodes_[id].back = [logits, id, probs, labels_copy](Tape& t) {
                const double upstream = t.nodes_[id].grad.at(0, 0);
                const double inv_n = upstream / probs->rows;
                for (int i = 0; i < probs->rows; ++i)
                    for (int j = 0; j < probs->cols; ++j) {
                        double d = probs->at(i, j);
                        if (j == (*labels_copy)[i]) d -= 1.0;
                        t.nodes_[logits].grad.at(i, j) += d * inv_n;
                    }
            };
        }
        return {id, *probs};
    }

    // Reverse sweep from `loss`; afterwards every parameter sink holds its
    // accumulated gradient.
    void backward(int loss) {
        if (nodes_.empty()) throw std::logic_error("backward without forward");
        detail::require_shape(val(loss).rows == 1 && val(loss).cols == 1, "backward seed");
        nodes_[loss].grad.at(0, 0) = 1.0;
        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.requires_grad) continue;
            if (n.back) n.back(*this);
            if (n.sink) {
                detail::require_shape(n.sink->same_shape(n.grad), "param grad sink");
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    n.sink->data[i] += n.grad.data[i];
            }
        }
    }

private:
    struct Node {
        Tensor2 value;
        Tensor2 grad;
        bool requires_grad = false;
        Tensor2* sink = nullptr;
        std::function<void(Tape&)> back;
    };

    // deque: value()/grad() references stay valid while more ops are recorded
    std::deque<Node> nodes_;

    const Tensor2& val(int id) const { return nodes_[id].value; }
    bool needs(int id) const { return nodes_[id].requires_grad; }

    int push(Tensor2 v, bool requires_grad, Tensor2* sink) {
        Node n;
        n.grad = requires_grad ? Tensor2::zeros_like(v) : Tensor2();
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        n.sink = sink;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    static void check_index_lists(const std::vector<std::vector<int>>& lists, int limit) {
        for (const auto& l : lists)
            for (int u : l)
                if (u < 0 || u >= limit)
                    throw std::out_of_range("scatter: neighbor index out of range");
    }

    static void check_graph_index(const std::vector<int>& gi, int rows, int num_graphs) {
        detail::require_shape(static_cast<int>(gi.size()) == rows, "graph index length");
        for (int g : gi)
            if (g < 0 || g >= num_graphs)
                throw std::out_of_range("graph pool: graph index out of range");
    }
};

}  // namespace gnnbench
