#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnnbench/batch.hpp"
#include "gnnbench/nn.hpp"
#include "gnnbench/optim.hpp"
#include "gnnbench/tape.hpp"

namespace gnnbench {

enum class ModelKind { baseline_fingerprint, baseline_deepsets, gin, graphsage };
enum class Aggregation { sum, mean, max };
enum class StopCriterion { validation_loss, validation_accuracy };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::baseline_fingerprint: return "baseline_fingerprint";
        case ModelKind::baseline_deepsets: return "baseline_deepsets";
        case ModelKind::gin: return "gin";
        case ModelKind::graphsage: return "graphsage";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "baseline_fingerprint") return ModelKind::baseline_fingerprint;
    if (s == "baseline_deepsets") return ModelKind::baseline_deepsets;
    if (s == "gin") return ModelKind::gin;
    if (s == "graphsage") return ModelKind::graphsage;
    throw ValidationError("unknown model kind: " + s);
}

inline std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::sum: return "sum";
        case Aggregation::mean: return "mean";
        case Aggregation::max: return "max";
    }
    return "?";
}

inline Aggregation aggregation_from_string(const std::string& s) {
    if (s == "sum") return Aggregation::sum;
    if (s == "mean") return Aggregation::mean;
    if (s == "max") return Aggregation::max;
    throw ValidationError("unknown aggregation: " + s);
}

inline std::string to_string(StopCriterion c) {
    return c == StopCriterion::validation_loss ? "loss" : "acc";
}

inline StopCriterion stop_criterion_from_string(const std::string& s) {
    if (s == "loss") return StopCriterion::validation_loss;
    if (s == "acc") return StopCriterion::validation_accuracy;
    throw ValidationError("unknown stop criterion: " + s);
}

// One point of the hyper-parameter grid: architecture plus optimizer fields.
struct ModelConfig {
    ModelKind kind = ModelKind::baseline_deepsets;
    int layers = 1;
    int hidden_units = 32;
    Aggregation aggregation = Aggregation::mean;  // graphsage only
    bool epsilon_trainable = false;               // gin only
    double dropout = 0.0;
    double learning_rate = 1e-2;
    double l2 = 0.0;
    OptimKind optimizer = OptimKind::adam;
    double momentum = 0.0;
    SchedKind scheduler = SchedKind::none;
    int sched_step = 50;
    double sched_gamma = 0.5;
    int batch_size = 32;
    std::optional<StopCriterion> stop_criterion;  // overrides the policy default
    std::optional<int> max_epochs;                // overrides the policy default

    OptimState make_optim_state() const {
        OptimState s;
        s.kind = optimizer;
        s.learning_rate = learning_rate;
        s.l2 = l2;
        s.momentum = momentum;
        s.scheduler = scheduler;
        s.sched_step = sched_step;
        s.sched_gamma = sched_gamma;
        return s;
    }
};

inline void validate_model_config(const ModelConfig& c) {
    if (c.layers < 1) throw ValidationError("model config: layers must be >= 1");
    if (c.hidden_units < 1) throw ValidationError("model config: hidden_units must be >= 1");
    if (c.batch_size < 1) throw ValidationError("model config: batch_size must be >= 1");
    if (!(c.learning_rate > 0.0))
        throw ValidationError("model config: learning_rate must be positive");
    if (c.l2 < 0.0) throw ValidationError("model config: l2 must be non-negative");
    if (c.dropout < 0.0 || c.dropout >= 1.0)
        throw ValidationError("model config: dropout must be in [0, 1)");
    if (c.sched_gamma < 0.0 || c.sched_gamma > 1.0)
        throw ValidationError("model config: scheduler gamma must be in [0, 1]");
    if (c.scheduler == SchedKind::step_lr && c.sched_step < 1)
        throw ValidationError("model config: scheduler step must be >= 1");
    if (c.epsilon_trainable && c.kind != ModelKind::gin)
        throw ValidationError("model config: epsilon_trainable applies to gin only");
    if (c.max_epochs && *c.max_epochs < 1)
        throw ValidationError("model config: max_epochs must be >= 1");
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["model"] = to_string(c.kind);
    j["layers"] = c.layers;
    j["hidden_units"] = c.hidden_units;
    if (c.kind == ModelKind::graphsage) j["aggregation"] = to_string(c.aggregation);
    if (c.kind == ModelKind::gin) j["epsilon_trainable"] = c.epsilon_trainable;
    j["dropout"] = c.dropout;
    j["learning_rate"] = c.learning_rate;
    j["l2"] = c.l2;
    j["optimizer"] = c.optimizer == OptimKind::adam ? "adam" : "sgd";
    j["momentum"] = c.momentum;
    j["scheduler"] = c.scheduler == SchedKind::step_lr ? "step_lr" : "none";
    j["sched_step"] = c.sched_step;
    j["sched_gamma"] = c.sched_gamma;
    j["batch_size"] = c.batch_size;
    if (c.stop_criterion) j["stop_criterion"] = to_string(*c.stop_criterion);
    if (c.max_epochs) j["max_epochs"] = *c.max_epochs;
    return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.kind = model_kind_from_string(j.at("model").get<std::string>());
        c.layers = j.value("layers", 1);
        c.hidden_units = j.value("hidden_units", 32);
        if (j.contains("aggregation"))
            c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
        c.epsilon_trainable = j.value("epsilon_trainable", false);
        c.dropout = j.value("dropout", 0.0);
        c.learning_rate = j.value("learning_rate", 1e-2);
        c.l2 = j.value("l2", 0.0);
        c.optimizer = j.value("optimizer", "adam") == "sgd" ? OptimKind::sgd : OptimKind::adam;
        c.momentum = j.value("momentum", 0.0);
        c.scheduler = j.value("scheduler", "none") == "step_lr" ? SchedKind::step_lr
                                                                : SchedKind::none;
        c.sched_step = j.value("sched_step", 50);
        c.sched_gamma = j.value("sched_gamma", 0.5);
        c.batch_size = j.value("batch_size", 32);
        if (j.contains("stop_criterion"))
            c.stop_criterion = stop_criterion_from_string(j.at("stop_criterion").get<std::string>());
        if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model config json: ") + e.what());
    }
    return c;
}

// The four in-scope classifiers behind one train/predict surface. Baselines
// never touch `batch.adj`, which is what makes them structure-agnostic.
class Model {
public:
    Model(const ModelConfig& cfg, int in_width, int num_classes, std::uint64_t init_seed)
        : cfg_(cfg), in_width_(in_width), num_classes_(num_classes), params_(init_seed) {
        if (in_width < 1 || num_classes < 2)
            throw ValidationError("model: need positive feature width and >= 2 classes");
        switch (cfg_.kind) {
            case ModelKind::baseline_fingerprint:
            case ModelKind::baseline_deepsets:
                build_baseline();
                break;
            case ModelKind::gin:
                if (cfg_.layers < 1) throw ValidationError("gin: layers must be >= 1");
                build_gin();
                break;
            case ModelKind::graphsage:
                if (cfg_.layers < 1) throw ValidationError("graphsage: layers must be >= 1");
                build_graphsage();
                break;
        }
    }

    ParamSet& params() { return params_; }
    const ModelConfig& config() const { return cfg_; }

    // Records the forward pass on `tape` and returns the logits node id.
    int forward(Tape& tape, const GraphBatch& batch, bool train, Rng& dropout_rng) {
        const int x = tape.input(batch.x);
        switch (cfg_.kind) {
            case ModelKind::baseline_fingerprint:
                return forward_fingerprint(tape, batch, x, train, dropout_rng);
            case ModelKind::baseline_deepsets:
                return forward_deepsets(tape, batch, x, train, dropout_rng);
            case ModelKind::gin:
                return forward_gin(tape, batch, x, train, dropout_rng);
            case ModelKind::graphsage:
                return forward_graphsage(tape, batch, x, train, dropout_rng);
        }
        throw std::logic_error("unreachable");
    }

    // Inference-mode logits (no dropout, no gradients recorded downstream).
    Tensor2 predict(const GraphBatch& batch) {
        Tape tape;
        Rng unused(0);
        return tape.value(forward(tape, batch, false, unused));
    }

private:
    ModelConfig cfg_;
    int in_width_;
    int num_classes_;
    ParamSet params_;

    int p(int idx, Tape& t) { return t.param(params_.params[idx].value, &params_.params[idx].grad); }

    int linear(Tape& t, int x, int w_idx, int b_idx) {
        return t.add_rowvec(t.matmul(x, p(w_idx, t)), p(b_idx, t));
    }

    // Global sum pooling, then a single-layer MLP with ReLU. No edge access.
    void build_baseline() {
        const int h = cfg_.hidden_units;
        if (cfg_.kind == ModelKind::baseline_fingerprint) {
            params_.add_weight("mlp.w", in_width_, h);
            params_.add_bias("mlp.b", h);
            params_.add_weight("out.w", h, num_classes_);
            params_.add_bias("out.b", num_classes_);
        } else {
            params_.add_weight("phi.w", in_width_, h);
            params_.add_bias("phi.b", h);
            params_.add_weight("rho.w", h, h);
            params_.add_bias("rho.b", h);
            params_.add_weight("out.w", h, num_classes_);
            params_.add_bias("out.b", num_classes_);
        }
    }

    int forward_fingerprint(Tape& t, const GraphBatch& b, int x, bool train, Rng& rng) {
        const int pooled = t.graph_pool_sum(x, &b.graph_index, b.num_graphs);
        int hid = t.relu(linear(t, pooled, 0, 1));
        hid = t.dropout(hid, cfg_.dropout, train, rng);
        return linear(t, hid, 2, 3);
    }

    // Node-wise MLP, sum pooling, then an MLP classifier; permutation
    // invariant by construction.
    int forward_deepsets(Tape& t, const GraphBatch& b, int x, bool train, Rng& rng) {
        const int phi = t.relu(linear(t, x, 0, 1));
        const int pooled = t.graph_pool_sum(phi, &b.graph_index, b.num_graphs);
        int hid = t.relu(linear(t, pooled, 2, 3));
        hid = t.dropout(hid, cfg_.dropout, train, rng);
        return linear(t, hid, 4, 5);
    }

    // Per layer: h <- MLP((1+eps) h + sum of neighbor h). Readout sums every
    // layer's node embeddings per graph (input included) and concatenates.
    void build_gin() {
        const int h = cfg_.hidden_units;
        int d = in_width_;
        for (int l = 0; l < cfg_.layers; ++l) {
            const std::string tag = "gin" + std::to_string(l);
            params_.add_weight(tag + ".w1", d, h);
            params_.add_bias(tag + ".b1", h);
            params_.add_weight(tag + ".w2", h, h);
            params_.add_bias(tag + ".b2", h);
            if (cfg_.epsilon_trainable) params_.add_scalar(tag + ".eps", 0.0);
            d = h;
        }
        params_.add_weight("out.w", in_width_ + cfg_.layers * h, num_classes_);
        params_.add_bias("out.b", num_classes_);
    }

    int forward_gin(Tape& t, const GraphBatch& b, int x, bool train, Rng& rng) {
        const int per_layer = cfg_.epsilon_trainable ? 5 : 4;
        int h = x;
        int readout = t.graph_pool_sum(x, &b.graph_index, b.num_graphs);
        for (int l = 0; l < cfg_.layers; ++l) {
            const int base = l * per_layer;
            const int nbr = t.scatter_sum(h, &b.adj);
            const int combined = cfg_.epsilon_trainable
                                     ? t.gin_combine(h, nbr, p(base + 4, t))
                                     : t.axpy(1.0, h, nbr);
            const int a = t.relu(linear(t, combined, base + 0, base + 1));
            h = t.relu(linear(t, a, base + 2, base + 3));
            readout = t.concat_cols(readout, t.graph_pool_sum(h, &b.graph_index, b.num_graphs));
        }
        readout = t.dropout(readout, cfg_.dropout, train, rng);
        const int out_base = cfg_.layers * per_layer;
        return linear(t, readout, out_base, out_base + 1);
    }

    // Per layer: aggregate full neighborhoods (no sampling), concatenate with
    // the self representation, project + ReLU, L2-normalize. Global readout is
    // max pooling.
    void build_graphsage() {
        const int h = cfg_.hidden_units;
        int d = in_width_;
        for (int l = 0; l < cfg_.layers; ++l) {
            const std::string tag = "sage" + std::to_string(l);
            params_.add_weight(tag + ".w", 2 * d, h);
            params_.add_bias(tag + ".b", h);
            d = h;
        }
        params_.add_weight("out.w", d, num_classes_);
        params_.add_bias("out.b", num_classes_);
    }

    int forward_graphsage(Tape& t, const GraphBatch& b, int x, bool train, Rng& rng) {
        int h = x;
        for (int l = 0; l < cfg_.layers; ++l) {
            int nbr = 0;
            switch (cfg_.aggregation) {
                case Aggregation::sum: nbr = t.scatter_sum(h, &b.adj); break;
                case Aggregation::mean: nbr = t.scatter_mean(h, &b.adj); break;
                case Aggregation::max: nbr = t.scatter_max(h, &b.adj); break;
            }
            const int cat = t.concat_cols(h, nbr);
            h = t.row_l2_normalize(t.relu(linear(t, cat, l * 2, l * 2 + 1)));
        }
        int readout = t.graph_pool_max(h, &b.graph_index, b.num_graphs);
        readout = t.dropout(readout, cfg_.dropout, train, rng);
        return linear(t, readout, cfg_.layers * 2, cfg_.layers * 2 + 1);
    }
};

// Median of the selected layer counts across folds; an even count averages
// the middle two, so halves are possible.
inline double selected_depth(std::vector<int> layers_per_fold) {
    if (layers_per_fold.empty()) throw ValidationError("selected_depth: empty input");
    std::sort(layers_per_fold.begin(), layers_per_fold.end());
    const std::size_t n = layers_per_fold.size();
    if (n % 2 == 1) return layers_per_fold[n / 2];
    return 0.5 * (layers_per_fold[n / 2 - 1] + layers_per_fold[n / 2]);
}

}  // namespace gnnbench
