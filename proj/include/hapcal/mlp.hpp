#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hapcal/errors.hpp"
#include "hapcal/rng.hpp"

namespace hapcal {

// Parallel input/target rows for supervised training.
struct TrainingSet {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return inputs.size(); }
};

// Fully connected network: ReLU on hidden layers, identity on the output
// layer. Weights are row-major per layer: weights[l][o * in + i] connects
// input unit i of layer l to output unit o.
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t layer_count() const { return weights.size(); }

    void validate() const {
        if (layer_sizes.size() < 2)
            throw ContractError("mlp needs at least input and output layers");
        for (int s : layer_sizes)
            if (s < 1) throw ContractError("mlp layer size must be positive");
        if (weights.size() != layer_sizes.size() - 1 ||
            biases.size() != weights.size())
            throw ContractError("mlp parameter shape mismatch");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const std::size_t in = static_cast<std::size_t>(layer_sizes[l]);
            const std::size_t out =
                static_cast<std::size_t>(layer_sizes[l + 1]);
            if (weights[l].size() != in * out || biases[l].size() != out)
                throw ContractError("mlp parameter shape mismatch");
            for (double w : weights[l])
                if (!std::isfinite(w))
                    throw ContractError("mlp weight not finite");
            for (double b : biases[l])
                if (!std::isfinite(b)) throw ContractError("mlp bias not finite");
        }
    }

    // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static Mlp initialized(std::vector<int> sizes, std::uint64_t seed) {
        Mlp net;
        net.layer_sizes = std::move(sizes);
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
            const int in = net.layer_sizes[l];
            const int out = net.layer_sizes[l + 1];
            const double bound = std::sqrt(6.0 / (in + out));
            std::vector<double> w(static_cast<std::size_t>(in) * out);
            for (double& v : w) v = rng.uniform(-bound, bound);
            net.weights.push_back(std::move(w));
            net.biases.emplace_back(static_cast<std::size_t>(out), 0.0);
        }
        net.validate();
        return net;
    }
};

inline std::vector<double> mlp_forward(const Mlp& net,
                                       const std::vector<double>& input) {
    if (input.size() != static_cast<std::size_t>(net.layer_sizes.front()))
        throw ContractError("mlp_forward: input length " +
                            std::to_string(input.size()) + " != " +
                            std::to_string(net.layer_sizes.front()));
    std::vector<double> act = input;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const std::size_t in = act.size();
        const std::size_t out = net.biases[l].size();
        const bool hidden = l + 1 < net.layer_count();
        std::vector<double> next(out);
        for (std::size_t o = 0; o < out; ++o) {
            double pre = net.biases[l][o];
            const double* row = net.weights[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) pre += row[i] * act[i];
            next[o] = hidden && pre < 0.0 ? 0.0 : pre;
        }
        act = std::move(next);
    }
    return act;
}

// Gradients in the same shape as the network parameters.
struct MlpGradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGradient zeros_like(const Mlp& net) {
        MlpGradient g;
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            g.weights.emplace_back(net.weights[l].size(), 0.0);
            g.biases.emplace_back(net.biases[l].size(), 0.0);
        }
        return g;
    }
};

// Loss is the squared error averaged over both the batch and the output
// dimensions; the gradient matches that normalization exactly.
inline double mean_squared_error(const Mlp& net, const TrainingSet& data) {
    if (data.size() == 0) throw ContractError("mse over empty dataset");
    const std::size_t dims =
        static_cast<std::size_t>(net.layer_sizes.back());
    double sum = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        if (data.targets[s].size() != dims)
            throw ContractError("mse: target dimension mismatch");
        const std::vector<double> y = mlp_forward(net, data.inputs[s]);
        for (std::size_t d = 0; d < dims; ++d) {
            const double e = y[d] - data.targets[s][d];
            sum += e * e;
        }
    }
    return sum / (static_cast<double>(data.size()) * static_cast<double>(dims));
}

inline MlpGradient mlp_gradient(const Mlp& net, const TrainingSet& batch) {
    if (batch.size() == 0) throw ContractError("mlp_gradient: empty batch");
    if (batch.targets.size() != batch.inputs.size())
        throw ContractError("mlp_gradient: inputs/targets length mismatch");
    const std::size_t out_dims =
        static_cast<std::size_t>(net.layer_sizes.back());
    const double scale = 1.0 / (static_cast<double>(batch.size()) *
                                static_cast<double>(out_dims));

    MlpGradient grad = MlpGradient::zeros_like(net);
    const std::size_t layers = net.layer_count();
    for (std::size_t s = 0; s < batch.size(); ++s) {
        if (batch.targets[s].size() != out_dims)
            throw ContractError("mlp_gradient: target dimension mismatch");
        // Forward pass keeping every layer's activation.
        std::vector<std::vector<double>> act(layers + 1);
        act[0] = batch.inputs[s];
        if (act[0].size() != static_cast<std::size_t>(net.layer_sizes.front()))
            throw ContractError("mlp_gradient: input dimension mismatch");
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = act[l].size();
            const std::size_t out = net.biases[l].size();
            const bool hidden = l + 1 < layers;
            act[l + 1].resize(out);
            for (std::size_t o = 0; o < out; ++o) {
                double pre = net.biases[l][o];
                const double* row = net.weights[l].data() + o * in;
                for (std::size_t i = 0; i < in; ++i) pre += row[i] * act[l][i];
                act[l + 1][o] = hidden && pre < 0.0 ? 0.0 : pre;
            }
        }
        // Backward pass. ReLU output is zero exactly when its input was
        // non-positive, so activation > 0 recovers the gate.
        std::vector<double> delta(out_dims);
        for (std::size_t d = 0; d < out_dims; ++d)
            delta[d] = 2.0 * (act[layers][d] - batch.targets[s][d]) * scale;
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in = act[l].size();
            const std::size_t out = delta.size();
            for (std::size_t o = 0; o < out; ++o) {
                grad.biases[l][o] += delta[o];
                double* grow = grad.weights[l].data() + o * in;
                for (std::size_t i = 0; i < in; ++i)
                    grow[i] += delta[o] * act[l][i];
            }
            if (l == 0) break;
            std::vector<double> prev(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double* row = net.weights[l].data() + o * in;
                for (std::size_t i = 0; i < in; ++i)
                    prev[i] += row[i] * delta[o];
            }
            for (std::size_t i = 0; i < in; ++i)
                if (act[l][i] <= 0.0) prev[i] = 0.0;
            delta = std::move(prev);
        }
    }
    return grad;
}

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    int batch_size = 25;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (epochs < 1) throw ContractError("epochs must be positive");
        if (!(learning_rate > 0.0))
            throw ContractError("learning_rate must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ContractError("betas must lie in [0, 1)");
        if (batch_size < 1) throw ContractError("batch_size must be positive");
    }
};

// First/second-moment update with bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n, const TrainConfig& cfg)
        : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

    void step(std::vector<double>& theta, const std::vector<double>& grad) {
        if (theta.size() != m_.size() || grad.size() != m_.size())
            throw ContractError("adam step: size mismatch");
        ++t_;
        const double mc = 1.0 - std::pow(cfg_.beta1, t_);
        const double vc = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / mc;
            const double v_hat = v_[i] / vc;
            theta[i] -= cfg_.learning_rate * m_hat /
                        (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }

private:
    std::vector<double> m_, v_;
    TrainConfig cfg_;
    int t_ = 0;
};

struct TrainResult {
    Mlp net;
    std::vector<double> loss_trace; // full-dataset MSE after each epoch
};

// Minibatch Adam over a seeded per-epoch shuffle. Deterministic given the
// seed; a non-finite epoch loss aborts with the epoch index.
inline TrainResult train_adam(Mlp net, const TrainingSet& data,
                              const TrainConfig& cfg) {
    cfg.validate();
    net.validate();
    if (data.size() == 0) throw ContractError("train_adam: empty dataset");
    if (data.targets.size() != data.inputs.size())
        throw ContractError("train_adam: inputs/targets length mismatch");

    // One flat parameter vector so Adam state lines up with gradients.
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        offsets.push_back(total);
        total += net.weights[l].size() + net.biases[l].size();
    }
    const auto flatten = [&](const auto& layers_w, const auto& layers_b) {
        std::vector<double> flat(total);
        for (std::size_t l = 0; l < layers_w.size(); ++l) {
            std::size_t o = offsets[l];
            std::copy(layers_w[l].begin(), layers_w[l].end(), flat.begin() + o);
            o += layers_w[l].size();
            std::copy(layers_b[l].begin(), layers_b[l].end(), flat.begin() + o);
        }
        return flat;
    };
    const auto unflatten = [&](const std::vector<double>& flat, Mlp& dst) {
        for (std::size_t l = 0; l < dst.layer_count(); ++l) {
            std::size_t o = offsets[l];
            std::copy(flat.begin() + o, flat.begin() + o + dst.weights[l].size(),
                      dst.weights[l].begin());
            o += dst.weights[l].size();
            std::copy(flat.begin() + o, flat.begin() + o + dst.biases[l].size(),
                      dst.biases[l].begin());
        }
    };

    std::vector<double> theta = flatten(net.weights, net.biases);
    AdamOptimizer adam(total, cfg);
    Rng rng(cfg.rng_seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(),
                         start + static_cast<std::size_t>(cfg.batch_size));
            TrainingSet batch;
            for (std::size_t i = start; i < stop; ++i) {
                batch.inputs.push_back(data.inputs[order[i]]);
                batch.targets.push_back(data.targets[order[i]]);
            }
            const MlpGradient g = mlp_gradient(net, batch);
            adam.step(theta, flatten(g.weights, g.biases));
            unflatten(theta, net);
        }
        const double loss = mean_squared_error(net, data);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " +
                                      std::to_string(epoch),
                                  epoch);
        result.loss_trace.push_back(loss);
    }
    result.net = std::move(net);
    return result;
}

// Per-dimension min-max scaling to [0, 1] for both sides of a training set.
// A constant dimension gets a unit span so the mapping stays invertible.
struct Normalizer {
    std::vector<double> in_lo, in_hi, out_lo, out_hi;

    static Normalizer fit(const TrainingSet& data) {
        if (data.size() == 0)
            throw ContractError("normalizer fit: empty dataset");
        Normalizer n;
        fit_side(data.inputs, n.in_lo, n.in_hi);
        fit_side(data.targets, n.out_lo, n.out_hi);
        return n;
    }

    std::vector<double> normalize_input(const std::vector<double>& v) const {
        return apply(v, in_lo, in_hi);
    }
    std::vector<double> normalize_output(const std::vector<double>& v) const {
        return apply(v, out_lo, out_hi);
    }
    std::vector<double> denormalize_input(const std::vector<double>& v) const {
        return invert(v, in_lo, in_hi);
    }
    std::vector<double> denormalize_output(const std::vector<double>& v) const {
        return invert(v, out_lo, out_hi);
    }

    TrainingSet normalize(const TrainingSet& data) const {
        TrainingSet out;
        for (const auto& v : data.inputs)
            out.inputs.push_back(normalize_input(v));
        for (const auto& v : data.targets)
            out.targets.push_back(normalize_output(v));
        return out;
    }

private:
    static void fit_side(const std::vector<std::vector<double>>& rows,
                         std::vector<double>& lo, std::vector<double>& hi) {
        const std::size_t dims = rows.front().size();
        lo.assign(dims, std::numeric_limits<double>::infinity());
        hi.assign(dims, -std::numeric_limits<double>::infinity());
        for (const auto& row : rows) {
            if (row.size() != dims)
                throw ContractError("normalizer fit: ragged rows");
            for (std::size_t d = 0; d < dims; ++d) {
                lo[d] = std::min(lo[d], row[d]);
                hi[d] = std::max(hi[d], row[d]);
            }
        }
        for (std::size_t d = 0; d < dims; ++d)
            if (!(hi[d] - lo[d] > 1e-12)) hi[d] = lo[d] + 1.0;
    }

    static std::vector<double> apply(const std::vector<double>& v,
                                     const std::vector<double>& lo,
                                     const std::vector<double>& hi) {
        if (v.size() != lo.size())
            throw ContractError("normalizer: dimension mismatch");
        std::vector<double> out(v.size());
        for (std::size_t d = 0; d < v.size(); ++d)
            out[d] = (v[d] - lo[d]) / (hi[d] - lo[d]);
        return out;
    }

    static std::vector<double> invert(const std::vector<double>& v,
                                      const std::vector<double>& lo,
                                      const std::vector<double>& hi) {
        if (v.size() != lo.size())
            throw ContractError("normalizer: dimension mismatch");
        std::vector<double> out(v.size());
        for (std::size_t d = 0; d < v.size(); ++d)
            out[d] = lo[d] + v[d] * (hi[d] - lo[d]);
        return out;
    }
};

// k-fold cross-validation: seeded shuffle, contiguous folds whose sizes
// differ by at most one. Each fold fits its normalizer on the training split
// only and reports held-out MSE in normalized units.
inline std::vector<double> cross_validate(const TrainingSet& data, int k,
                                          const std::vector<int>& layer_sizes,
                                          const TrainConfig& cfg) {
    if (k < 2) throw ContractError("cross_validate: k must be at least 2");
    if (data.size() < static_cast<std::size_t>(k))
        throw InsufficientData("cross_validate: dataset smaller than k");

    Rng rng(cfg.rng_seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const std::size_t n = order.size();
    std::vector<double> fold_mse;
    for (int fold = 0; fold < k; ++fold) {
        const std::size_t begin = n * fold / k;
        const std::size_t end = n * (fold + 1) / k;
        TrainingSet train, held;
        for (std::size_t i = 0; i < n; ++i) {
            TrainingSet& dst = (i >= begin && i < end) ? held : train;
            dst.inputs.push_back(data.inputs[order[i]]);
            dst.targets.push_back(data.targets[order[i]]);
        }
        const Normalizer norm = Normalizer::fit(train);
        TrainConfig fold_cfg = cfg;
        fold_cfg.rng_seed = mix_seed(cfg.rng_seed, 1000 + fold);
        Mlp net = Mlp::initialized(layer_sizes, mix_seed(cfg.rng_seed, fold));
        const TrainResult trained =
            train_adam(std::move(net), norm.normalize(train), fold_cfg);
        fold_mse.push_back(
            mean_squared_error(trained.net, norm.normalize(held)));
    }
    return fold_mse;
}

} // namespace hapcal
