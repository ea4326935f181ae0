#include "topocaps/nn.hpp"

#include <cmath>

#include "topocaps/errors.hpp"

namespace topocaps::nn {

std::size_t MlpParams::n_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
    MlpGrads g;
    g.layers.resize(p.layers.size());
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        g.layers[k].weight.assign(p.layers[k].weight.size(), 0.0);
        g.layers[k].bias.assign(p.layers[k].bias.size(), 0.0);
    }
    return g;
}

void MlpGrads::scale(double c) {
    for (auto& l : layers) {
        for (auto& w : l.weight) w *= c;
        for (auto& b : l.bias) b *= c;
    }
}

void MlpGrads::add(const MlpGrads& other, double c) {
    if (layers.size() != other.layers.size())
        throw DimensionError("MlpGrads::add: layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        for (std::size_t i = 0; i < layers[k].weight.size(); ++i)
            layers[k].weight[i] += c * other.layers[k].weight[i];
        for (std::size_t i = 0; i < layers[k].bias.size(); ++i)
            layers[k].bias[i] += c * other.layers[k].bias[i];
    }
}

static void check_layer_sizes(const std::vector<std::size_t>& layer_sizes) {
    if (layer_sizes.size() < 2)
        throw ConfigError("mlp_init: need at least input and output sizes");
    for (auto s : layer_sizes)
        if (s == 0) throw ConfigError("mlp_init: zero layer width");
}

MlpParams mlp_init(const std::vector<std::size_t>& layer_sizes, Rng& rng) {
    check_layer_sizes(layer_sizes);
    MlpParams p;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        DenseLayer l;
        l.in = layer_sizes[k];
        l.out = layer_sizes[k + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        l.weight.resize(l.out * l.in);
        l.bias.resize(l.out);
        for (auto& w : l.weight) w = rng.uniform(-bound, bound);
        for (auto& b : l.bias) b = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(l));
    }
    return p;
}

MlpParams mlp_init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    Rng rng(seed);
    return mlp_init(layer_sizes, rng);
}

MlpParams mlp_zeros(const std::vector<std::size_t>& layer_sizes) {
    check_layer_sizes(layer_sizes);
    MlpParams p;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        DenseLayer l;
        l.in = layer_sizes[k];
        l.out = layer_sizes[k + 1];
        l.weight.assign(l.out * l.in, 0.0);
        l.bias.assign(l.out, 0.0);
        p.layers.push_back(std::move(l));
    }
    return p;
}

Vec mlp_forward(const MlpParams& params, const Vec& x, MlpCache* cache) {
    if (x.size() != params.input_dim())
        throw DimensionError("mlp_forward: input width mismatch");
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
        cache->n_layers = params.layers.size();
    }
    Vec h = x;
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const auto& l = params.layers[k];
        Vec y(l.out);
        for (std::size_t i = 0; i < l.out; ++i) {
            const double* row = &l.weight[i * l.in];
            double acc = l.bias[i];
            for (std::size_t j = 0; j < l.in; ++j) acc += row[j] * h[j];
            y[i] = acc;
        }
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(y);
        }
        // ReLU on all but the last layer
        if (k + 1 < params.layers.size())
            for (auto& v : y) v = v > 0.0 ? v : 0.0;
        h = std::move(y);
    }
    return h;
}

Vec mlp_backward(const MlpParams& params, const MlpCache& cache, const Vec& grad_y,
                 MlpGrads& grads) {
    const std::size_t n_layers = params.layers.size();
    if (cache.n_layers != n_layers || cache.inputs.size() != n_layers)
        throw UsageError("mlp_backward: cache does not match params");
    if (grad_y.size() != params.output_dim())
        throw DimensionError("mlp_backward: grad_y width mismatch");
    if (grads.layers.size() != n_layers)
        throw DimensionError("mlp_backward: grads layout mismatch");

    Vec g = grad_y;
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& l = params.layers[k];
        const Vec& input = cache.inputs[k];
        if (k + 1 < n_layers) {
            const Vec& pre = cache.pre[k];
            for (std::size_t i = 0; i < l.out; ++i)
                if (pre[i] <= 0.0) g[i] = 0.0;
        }
        auto& gl = grads.layers[k];
        for (std::size_t i = 0; i < l.out; ++i) {
            double* grow = &gl.weight[i * l.in];
            const double gi = g[i];
            for (std::size_t j = 0; j < l.in; ++j) grow[j] += gi * input[j];
            gl.bias[i] += gi;
        }
        Vec gx(l.in, 0.0);
        for (std::size_t i = 0; i < l.out; ++i) {
            const double* row = &l.weight[i * l.in];
            const double gi = g[i];
            for (std::size_t j = 0; j < l.in; ++j) gx[j] += gi * row[j];
        }
        g = std::move(gx);
    }
    return g;
}

void sgd_momentum_step(ParamView params, ParamView grads, OptimizerState& state) {
    const std::size_t n = params.total();
    if (grads.total() != n)
        throw DimensionError("sgd_momentum_step: params/grads size mismatch");
    if (state.velocity.empty()) state.velocity.assign(n, 0.0);
    if (state.velocity.size() != n)
        throw DimensionError("sgd_momentum_step: velocity size mismatch");

    std::size_t off = 0;
    auto gb = grads.blocks.begin();
    std::size_t gpos = 0;
    for (auto& [p, len] : params.blocks) {
        for (std::size_t i = 0; i < len; ++i) {
            while (gpos >= gb->second) {
                ++gb;
                gpos = 0;
            }
            double& v = state.velocity[off + i];
            v = state.momentum * v - state.learning_rate * gb->first[gpos];
            p[i] += v;
            ++gpos;
        }
        off += len;
    }
}

}  // namespace topocaps::nn
