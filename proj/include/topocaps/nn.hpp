#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "topocaps/rng.hpp"
#include "topocaps/tensor.hpp"

namespace topocaps::nn {

// One dense layer: y = W x + b, with W stored row-major (out x in).
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Vec weight;  // out * in
    Vec bias;    // out
};

// Feed-forward stack: ReLU between layers, identity at the output.
struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().in; }
    std::size_t output_dim() const { return layers.back().out; }
    std::size_t n_params() const;
};

// Gradients (or optimizer velocity) with the same layout as MlpParams.
struct MlpGrads {
    struct LayerGrads {
        Vec weight;
        Vec bias;
    };
    std::vector<LayerGrads> layers;

    static MlpGrads zeros_like(const MlpParams& p);
    void scale(double c);
    void add(const MlpGrads& other, double c = 1.0);
};

// Activations retained by mlp_forward for the backward pass.
struct MlpCache {
    std::vector<Vec> inputs;  // input to each layer (post-ReLU of previous)
    std::vector<Vec> pre;     // pre-activation output of each layer
    std::size_t n_layers = 0;
};

// Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and biases.
MlpParams mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);
MlpParams mlp_init(const std::vector<std::size_t>& layer_sizes, Rng& rng);
MlpParams mlp_zeros(const std::vector<std::size_t>& layer_sizes);

Vec mlp_forward(const MlpParams& params, const Vec& x, MlpCache* cache = nullptr);

// Accumulates parameter gradients into `grads` and returns grad wrt x.
Vec mlp_backward(const MlpParams& params, const MlpCache& cache, const Vec& grad_y,
                 MlpGrads& grads);

// Classical (heavy-ball) momentum over a flat parameter view:
//   v <- momentum * v - lr * g;  p <- p + v
struct OptimizerState {
    double learning_rate = 1e-4;
    double momentum = 0.9;
    Vec velocity;  // flat, sized on first step
};

// Flat view over a set of parameter blocks (layer weights/biases, mu, ...).
struct ParamView {
    std::vector<std::pair<double*, std::size_t>> blocks;

    void add(Vec& v) { blocks.emplace_back(v.data(), v.size()); }
    void add(double& s) { blocks.emplace_back(&s, 1); }
    void add(MlpParams& p) {
        for (auto& l : p.layers) {
            add(l.weight);
            add(l.bias);
        }
    }
    void add(MlpGrads& g) {
        for (auto& l : g.layers) {
            add(l.weight);
            add(l.bias);
        }
    }
    std::size_t total() const {
        std::size_t n = 0;
        for (auto& b : blocks) n += b.second;
        return n;
    }
};

void sgd_momentum_step(ParamView params, ParamView grads, OptimizerState& state);

}  // namespace topocaps::nn
